"""Experiment orchestration: tracking runs, RMSE maps, awareness sweeps.

Monte Carlo protocol: every work item (step, map cell, awareness draw)
derives its own random stream from the scenario seed and its indices, so
results are reproducible and independent of evaluation order and thread
count. Received blocks are always synthesized from the full surface set;
predictions see only the sampled awareness subset.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import NfSceneEval, full_mask, ids_to_mask, scene_eval
from .geometry import Point, as_point
from .propagation import (
    ArrayGeometry,
    AwarenessSet,
    Environment,
    build_path_set,
    channel_matrix,
)
from .signal import synthesize_rx
from .tracker import TrackerConfig, TrackState, estimate_step, grid_array

# stream tags for per-item RNG derivation
_TAG_TRACK = 1
_TAG_MAP_NOISE = 2
_TAG_MAP_AW = 3
_TAG_SWEEP_NOISE = 4
_TAG_SWEEP_AW = 5
_TAG_SWEEP_ANCHOR = 6


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one work item."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class Scenario:
    environment: Environment
    array: ArrayGeometry
    ofdm: OfdmConfig
    signal: SignalConfig
    tracker: TrackerConfig
    trajectory: tuple[Point, ...]
    seed: int

    def __post_init__(self):
        traj = tuple(as_point(p) for p in self.trajectory)
        if not traj:
            raise ValueError("trajectory must not be empty")
        vmax_step = self.tracker.v_max * self.tracker.delta_t
        for k in range(1, len(traj)):
            d = math.hypot(traj[k].x - traj[k - 1].x, traj[k].y - traj[k - 1].y)
            if d > vmax_step * (1.0 + 1e-9):
                raise ValueError(
                    f"trajectory step {k} moves {d:.3f} m, above v_max*delta_t={vmax_step:.3f} m"
                )
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "trajectory", traj)


@dataclass
class TrackRecord:
    step: int
    truth: Point
    estimate: Point
    error: float
    objective: float
    blind: bool
    elapsed: float


@dataclass(frozen=True)
class EtaSweepRow:
    eta: float
    model: str
    rmse: float
    n_draws: int


@dataclass(frozen=True)
class MapCell:
    position: Point
    rmse: Optional[float]  # None when not trackable
    trackable: bool


def sample_awareness(env: Environment, eta: float, rng: np.random.Generator) -> AwarenessSet:
    """Uniformly random subset of round(eta * S) surface ids."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    s = env.n_surfaces
    s_a = int(round(eta * s))
    if s_a == 0:
        return AwarenessSet(())
    if s_a == s:
        return AwarenessSet(tuple(range(s)))
    ids = rng.choice(s, size=s_a, replace=False)
    return AwarenessSet(tuple(sorted(int(i) for i in ids)))


def trackable(p: Point, env: Environment, array: ArrayGeometry) -> bool:
    """True iff at least one element keeps a valid path under the full set."""
    return build_path_set(p, array, env.surfaces).any_path()


def classify_zone(p: Point, env: Environment, array: ArrayGeometry) -> str:
    """Propagation character at p: los_only | nlos_only | mixed | blind."""
    ps = build_path_set(p, array, env.surfaces)
    any_los = any(rec.kind == "los" for paths in ps.per_element for rec in paths)
    any_nlos = any(rec.kind == "nlos" for paths in ps.per_element for rec in paths)
    if any_los and any_nlos:
        return "mixed"
    if any_los:
        return "los_only"
    if any_nlos:
        return "nlos_only"
    return "blind"


def run_tracking(
    sc: Scenario, awareness: AwarenessSet, model: str = "nf"
) -> list[TrackRecord]:
    """Track along the scenario trajectory from the known initial position."""
    known = awareness.surfaces_of(sc.environment)
    state = TrackState(sc.trajectory[0])
    records = []
    for k in range(1, len(sc.trajectory)):
        truth = sc.trajectory[k]
        h_true = channel_matrix(truth, sc.array, sc.environment.surfaces, sc.ofdm)
        rx = synthesize_rx(k, h_true, sc.signal, sc.ofdm, rng_for(sc.seed, _TAG_TRACK, k))
        t0 = time.perf_counter()
        est, value, blind = estimate_step(
            rx, state, sc.tracker, known, sc.array, sc.ofdm, model
        )
        elapsed = time.perf_counter() - t0
        err = math.hypot(truth.x - est.x, truth.y - est.y)
        records.append(TrackRecord(k, truth, est, err, value, blind, elapsed))
        state = TrackState(est, k, blind)
    return records


def map_positions(env: Environment, cell: float, margin: float = 0.5) -> list[Point]:
    """Cell-center lattice covering the environment bounding box plus margin."""
    if cell <= 0:
        raise ValueError("cell size must be positive")
    xs = [q for s in env.surfaces for q in (s.geom.a.x, s.geom.b.x)]
    ys = [q for s in env.surfaces for q in (s.geom.a.y, s.geom.b.y)]
    if not xs:
        raise ValueError("environment has no surfaces to bound the map")
    x0, x1 = min(xs) - margin, max(xs) + margin
    y0, y1 = min(ys) - margin, max(ys) + margin
    nx = int(math.floor((x1 - x0) / cell)) + 1
    ny = int(math.floor((y1 - y0) / cell)) + 1
    return [
        Point(x0 + i * cell, y0 + j * cell) for j in range(ny) for i in range(nx)
    ]


def _trackable_flags(positions: Sequence[Point], sc: Scenario) -> np.ndarray:
    pts = np.array([(p.x, p.y) for p in positions])
    ev = NfSceneEval(pts, sc.array, sc.environment.surfaces, sc.ofdm)
    return ev.any_path(full_mask(sc.environment.n_surfaces))


def _masks_for_eta(sc: Scenario, eta: float, tag: int, indices) -> list[int]:
    s = sc.environment.n_surfaces
    masks = []
    for idx in indices:
        if eta >= 1.0:
            masks.append(full_mask(s))
        elif eta <= 0.0:
            masks.append(0)
        else:
            aw = sample_awareness(sc.environment, eta, rng_for(sc.seed, tag, *idx))
            masks.append(ids_to_mask(aw.known_ids))
    return masks


def _cell_errors(
    sc: Scenario,
    truth: Point,
    model: str,
    masks: Sequence[int],
    blocks: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-step errors at one map position, previous estimate = truth.

    Returns (errors, blind flags) per draw; blind draws hold the previous
    estimate and are excluded from RMSE statistics by the callers.
    """
    cand = grid_array(truth, sc.tracker)
    ev = scene_eval(model, cand, sc.array, sc.environment.surfaces, sc.ofdm)
    scores = ev.scores(masks, blocks)
    best = np.argmax(scores, axis=1)
    values = scores[np.arange(scores.shape[0]), best]
    blind = values == 0.0
    dx = cand[best, 0] - truth.x
    dy = cand[best, 1] - truth.y
    errors = np.hypot(dx, dy)
    errors[blind] = 0.0  # estimate held at truth anchor; excluded anyway
    return errors, blind


def rmse_map(
    sc: Scenario,
    positions: Sequence[Point],
    trials: int,
    model: str = "nf",
    eta: float = 1.0,
) -> list[MapCell]:
    """Per-position tracking RMSE under steady-state conditions.

    Each trackable position gets ``trials`` independent single-step
    estimates seeded at the truth; RMSE pools their squared errors. Blind
    draws are excluded; non-trackable positions are reported without RMSE.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    flags = _trackable_flags(positions, sc)
    cells = []
    for idx, (p, ok) in enumerate(zip(positions, flags)):
        if not ok:
            cells.append(MapCell(p, None, False))
            continue
        h_true = channel_matrix(p, sc.array, sc.environment.surfaces, sc.ofdm)
        blocks = np.stack([
            synthesize_rx(t, h_true, sc.signal, sc.ofdm,
                          rng_for(sc.seed, _TAG_MAP_NOISE, idx, t)).values
            for t in range(trials)
        ])
        masks = _masks_for_eta(sc, eta, _TAG_MAP_AW, [(idx, t) for t in range(trials)])
        errors, blind = _cell_errors(sc, p, model, masks, blocks)
        keep = ~blind
        if keep.any():
            rmse = float(np.sqrt(np.mean(errors[keep] ** 2)))
        else:
            rmse = float("nan")
        cells.append(MapCell(p, rmse, True))
    return cells


def _sweep_errors(
    sc: Scenario,
    draws_per_eta: int,
    models: Sequence[str],
    positions: Optional[Sequence[Point]],
    cell: float,
):
    """Tracking-step errors behind the eta sweep.

    Each sample is one genuine tracking step: the UE has moved v_max*delta_t
    in a random direction since the anchor (the previous true position), and
    the estimate is searched around that anchor, so the truth generally sits
    off the candidate lattice. Awareness subsets are drawn per (eta, draw)
    and shared across positions and models; noise and motion direction are
    drawn per (position, draw) and shared across eta values and models.

    Returns (etas, errors, blind) with arrays indexed [eta, draw] per model
    in a dict, pooled over positions: errors[mo][ei][d] is a list.
    """
    if draws_per_eta < 1:
        raise ValueError("draws_per_eta must be >= 1")
    if positions is None:
        positions = map_positions(sc.environment, cell)
    s = sc.environment.n_surfaces
    etas = [i / s for i in range(s + 1)]
    flags = _trackable_flags(positions, sc)
    tracked = [(i, p) for i, (p, ok) in enumerate(zip(positions, flags)) if ok]
    step_len = sc.tracker.v_max * sc.tracker.delta_t

    masks = []
    for ei, eta in enumerate(etas):
        masks.extend(_masks_for_eta(sc, eta, _TAG_SWEEP_AW, [(ei, d) for d in range(draws_per_eta)]))
    n_eta = len(etas)

    errors = {mo: [[[] for _ in range(draws_per_eta)] for _ in etas] for mo in models}
    for idx, p in tracked:
        h_true = channel_matrix(p, sc.array, sc.environment.surfaces, sc.ofdm)
        for d in range(draws_per_eta):
            z = synthesize_rx(d, h_true, sc.signal, sc.ofdm,
                              rng_for(sc.seed, _TAG_SWEEP_NOISE, idx, d)).values
            ang = rng_for(sc.seed, _TAG_SWEEP_ANCHOR, idx, d).uniform(0.0, 2.0 * math.pi)
            anchor = Point(p.x - step_len * math.cos(ang), p.y - step_len * math.sin(ang))
            cand = grid_array(anchor, sc.tracker)
            draw_masks = [masks[ei * draws_per_eta + d] for ei in range(n_eta)]
            blocks = np.broadcast_to(z, (n_eta,) + z.shape)
            for mo in models:
                ev = scene_eval(mo, cand, sc.array, sc.environment.surfaces, sc.ofdm)
                scores = ev.scores(draw_masks, blocks)
                best = np.argmax(scores, axis=1)
                values = scores[np.arange(n_eta), best]
                for ei in range(n_eta):
                    if values[ei] == 0.0:
                        errors[mo][ei][d].append(float("nan"))  # blind: held estimate
                    else:
                        b = best[ei]
                        errors[mo][ei][d].append(
                            math.hypot(cand[b, 0] - p.x, cand[b, 1] - p.y)
                        )
    return etas, errors


def sweep_eta(
    sc: Scenario,
    draws_per_eta: int,
    models: Sequence[str] = ("nf", "ff"),
    positions: Optional[Sequence[Point]] = None,
    cell: float = 2.0,
) -> list[EtaSweepRow]:
    """RMSE versus awareness level eta in {0, 1/S, ..., 1} for each model.

    Squared tracking-step errors pool over positions and awareness draws;
    blind samples are excluded. See :func:`_sweep_errors` for the protocol.
    """
    etas, errors = _sweep_errors(sc, draws_per_eta, models, positions, cell)
    rows = []
    for ei, eta in enumerate(etas):
        for mo in models:
            vals = np.array([e for d in errors[mo][ei] for e in d])
            vals = vals[~np.isnan(vals)]
            rmse = float(np.sqrt(np.mean(vals ** 2))) if vals.size else float("nan")
            rows.append(EtaSweepRow(eta, mo, rmse, draws_per_eta))
    return rows


def per_draw_rmse(
    sc: Scenario,
    draws: int,
    models: Sequence[str] = ("nf", "ff"),
    positions: Optional[Sequence[Point]] = None,
    cell: float = 2.0,
) -> dict[str, np.ndarray]:
    """RMSE over positions separately per (eta, draw), per model.

    Same streams as :func:`sweep_eta`, so draws are paired between models
    and eta values for statistical comparisons. Returns arrays of shape
    (n_eta, draws).
    """
    etas, errors = _sweep_errors(sc, draws, models, positions, cell)
    out = {}
    for mo in models:
        rows = np.full((len(etas), draws), np.nan)
        for ei in range(len(etas)):
            for d in range(draws):
                vals = np.array(errors[mo][ei][d])
                vals = vals[~np.isnan(vals)]
                if vals.size:
                    rows[ei, d] = math.sqrt(np.mean(vals ** 2))
        out[mo] = rows
    return out


def resample_polyline(
    waypoints: Sequence[Point], speed: float, delta_t: float
) -> list[Point]:
    """Walk the waypoint polyline at constant speed, sampling every delta_t."""
    wps = [as_point(p) for p in waypoints]
    if len(wps) < 2:
        return list(wps)
    if speed <= 0:
        raise ValueError("speed must be positive")
    step = speed * delta_t
    out = [wps[0]]
    seg = 0
    pos = wps[0]
    remaining = step
    while seg < len(wps) - 1:
        tgt = wps[seg + 1]
        d = math.hypot(tgt.x - pos.x, tgt.y - pos.y)
        if d <= remaining:
            remaining -= d
            pos = tgt
            seg += 1
        else:
            f = remaining / d
            pos = Point(pos.x + f * (tgt.x - pos.x), pos.y + f * (tgt.y - pos.y))
            out.append(pos)
            remaining = step
    last = out[-1]
    if math.hypot(wps[-1].x - last.x, wps[-1].y - last.y) > 1e-9:
        out.append(wps[-1])  # final waypoint closes the path
    else:
        out[-1] = wps[-1]  # snap instead of keeping a sub-eps trailing step
    return out
