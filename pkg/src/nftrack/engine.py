"""Glue between the domain objects and the batched kernels."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _fastpath as fp
from .geometry import EPS_GEOM
from .propagation import ArrayGeometry, ConstantBeta, Fresnel, Surface
from .signal import OfdmConfig


def surfaces_to_array(surfaces: Sequence[Surface]) -> np.ndarray:
    segs = np.zeros((len(surfaces), 4))
    for i, s in enumerate(surfaces):
        segs[i, 0] = s.geom.a.x
        segs[i, 1] = s.geom.a.y
        segs[i, 2] = s.geom.b.x
        segs[i, 3] = s.geom.b.y
    return segs


def freq_arrays(ofdm: OfdmConfig) -> tuple[np.ndarray, np.ndarray, bool]:
    freqs = np.array(ofdm.subcarrier_freqs)
    lams = np.array(ofdm.wavelengths)
    uniform = True
    if len(freqs) > 2:
        d = np.diff(freqs)
        uniform = bool(np.max(np.abs(d - d[0])) < 1e-3)
    return freqs, lams, uniform


def betas_from_cos(surfaces: Sequence[Surface], nl_cos: np.ndarray) -> np.ndarray:
    """Reflection coefficients from incidence cosines, last axis = surface."""
    out = np.empty_like(nl_cos)
    for j, s in enumerate(surfaces):
        model = s.reflect_model
        c = nl_cos[..., j]
        if isinstance(model, ConstantBeta):
            out[..., j] = model.beta
        elif isinstance(model, Fresnel):
            root = np.sqrt(np.maximum(model.eps_r - 1.0 + c * c, 0.0))
            den = c + root
            b = np.where(den > 0.0, np.abs((c - root) / np.where(den > 0.0, den, 1.0)), 1.0)
            out[..., j] = np.clip(b, 0.0, 1.0)
        else:
            raise TypeError(f"unknown reflect model {model!r}")
    return out


def full_mask(n_surfaces: int) -> int:
    return (1 << n_surfaces) - 1


def ids_to_mask(ids: Sequence[int]) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << int(i)
    return mask


class NfSceneEval:
    """Path geometry of a candidate set, reusable across awareness masks."""

    def __init__(self, cand: np.ndarray, array: ArrayGeometry, surfaces: Sequence[Surface], ofdm: OfdmConfig):
        self.cand = np.ascontiguousarray(cand, dtype=np.float64)
        self.surfaces = tuple(surfaces)
        elems = array.as_array()
        segs = surfaces_to_array(self.surfaces)
        (self.los_d, self.los_block, self.nl_valid,
         self.nl_d, self.nl_cos, self.nl_block) = fp.path_geometry(self.cand, elems, segs, EPS_GEOM)
        self.betas = betas_from_cos(self.surfaces, self.nl_cos) if self.surfaces else np.zeros(self.nl_cos.shape)
        self.freqs, self.lams, self.uniform = freq_arrays(ofdm)

    def scores(self, masks: Sequence[int], blocks: np.ndarray) -> np.ndarray:
        """Objective per (draw, candidate); blocks has shape (D, M, N)."""
        masks = np.asarray(masks, dtype=np.int64)
        umasks, draw_to_u = np.unique(masks, return_inverse=True)
        z = np.ascontiguousarray(blocks, dtype=np.complex128)
        zre = np.ascontiguousarray(z.real)
        zim = np.ascontiguousarray(z.imag)
        znorm = np.sqrt((zre**2 + zim**2).sum(axis=2))
        return fp.nf_objective_batch(
            self.los_d, self.los_block, self.nl_valid, self.nl_d, self.betas,
            self.nl_block, umasks, draw_to_u.astype(np.int64), zre, zim, znorm,
            self.freqs, self.lams, self.uniform,
        )

    def any_path(self, mask: int) -> np.ndarray:
        """Per-candidate flag: at least one element keeps a valid path under mask."""
        m = np.int64(mask)
        los_ok = (self.los_block & m) == 0
        sel = np.arange(self.nl_valid.shape[2])
        known = ((m >> sel) & 1).astype(bool)
        nl_ok = self.nl_valid & known[None, None, :] & ((self.nl_block & m) == 0)
        return (los_ok | nl_ok.any(axis=2)).any(axis=1)


class FfSceneEval:
    """Far-field counterpart of NfSceneEval (reference-point path set)."""

    def __init__(self, cand: np.ndarray, array: ArrayGeometry, surfaces: Sequence[Surface], ofdm: OfdmConfig):
        self.cand = np.ascontiguousarray(cand, dtype=np.float64)
        self.surfaces = tuple(surfaces)
        ref = array.centroid
        elems = array.as_array()
        self.offs = elems - np.array([ref.x, ref.y])
        segs = surfaces_to_array(self.surfaces)
        (self.los_d, self.los_k, self.los_block, self.nl_valid,
         self.nl_d, self.nl_cos, self.nl_block, self.nl_k) = fp.ff_path_geometry(
            self.cand, ref.x, ref.y, segs, EPS_GEOM)
        self.betas = betas_from_cos(self.surfaces, self.nl_cos) if self.surfaces else np.zeros(self.nl_cos.shape)
        self.freqs, self.lams, self.uniform = freq_arrays(ofdm)

    def scores(self, masks: Sequence[int], blocks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        umasks, draw_to_u = np.unique(masks, return_inverse=True)
        z = np.ascontiguousarray(blocks, dtype=np.complex128)
        zre = np.ascontiguousarray(z.real)
        zim = np.ascontiguousarray(z.imag)
        znorm = np.sqrt((zre**2 + zim**2).sum(axis=2))
        return fp.ff_objective_batch(
            self.los_d, self.los_k, self.los_block, self.nl_valid, self.nl_d,
            self.betas, self.nl_block, self.nl_k,
            self.offs, umasks, draw_to_u.astype(np.int64), zre, zim, znorm,
            self.freqs, self.lams, self.uniform,
        )


def scene_eval(model: str, cand, array, surfaces, ofdm):
    if model == "nf":
        return NfSceneEval(cand, array, surfaces, ofdm)
    if model == "ff":
        return FfSceneEval(cand, array, surfaces, ofdm)
    raise ValueError(f"unknown channel model {model!r} (expected 'nf' or 'ff')")


def reflect_model_arrays(surfaces: Sequence[Surface]) -> tuple[np.ndarray, np.ndarray]:
    kinds = np.zeros(len(surfaces), dtype=np.int64)
    params = np.zeros(len(surfaces))
    for i, s in enumerate(surfaces):
        model = s.reflect_model
        if isinstance(model, ConstantBeta):
            kinds[i], params[i] = 0, model.beta
        elif isinstance(model, Fresnel):
            kinds[i], params[i] = 1, model.eps_r
        else:
            raise TypeError(f"unknown reflect model {model!r}")
    return kinds, params


def step_scores(
    model: str,
    cand: np.ndarray,
    array: ArrayGeometry,
    surfaces: Sequence[Surface],
    ofdm: OfdmConfig,
    block: np.ndarray,
) -> np.ndarray:
    """Objective per candidate for one observation over the given surfaces.

    Uses the fused early-exit kernels; all surfaces in the list count as
    known. Equivalent to scene_eval(...).scores([full mask], block).
    """
    cand = np.ascontiguousarray(cand, dtype=np.float64)
    z = np.ascontiguousarray(block, dtype=np.complex128)
    zre = np.ascontiguousarray(z.real)
    zim = np.ascontiguousarray(z.imag)
    znorm = np.sqrt((zre**2 + zim**2).sum(axis=1))
    kinds, params = reflect_model_arrays(surfaces)
    segs = surfaces_to_array(surfaces)
    freqs, lams, uniform = freq_arrays(ofdm)
    mask = np.int64(full_mask(len(surfaces)))
    if model == "nf":
        return fp.nf_step_scores(
            cand, array.as_array(), segs, kinds, params, mask,
            zre, zim, znorm, freqs, lams, uniform,
        )
    if model == "ff":
        ref = array.centroid
        offs = array.as_array() - np.array([ref.x, ref.y])
        return fp.ff_step_scores(
            cand, offs, ref.x, ref.y, segs, kinds, params, mask,
            zre, zim, znorm, freqs, lams, uniform,
        )
    raise ValueError(f"unknown channel model {model!r} (expected 'nf' or 'ff')")
