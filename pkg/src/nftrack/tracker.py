"""Grid-search position tracking by cosine similarity.

Per step: lay a disc-shaped candidate lattice around the previous estimate
(radius = v_max * delta_t + margin), predict the channel at every candidate
from the known surfaces only, and pick the candidate whose predicted channel
is most collinear with the received block, one subcarrier at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .engine import step_scores
from .geometry import Point, as_point
from .propagation import ArrayGeometry, Surface, channel_matrix, ff_channel_matrix
from .signal import OfdmConfig, RxBlock


class InfeasibleConfigError(ValueError):
    """Tracker configuration that cannot produce a usable search grid."""


@dataclass(frozen=True)
class TrackerConfig:
    v_max: float          # m/s
    delta_t: float        # s
    margin: float         # m, slack on top of reachable radius
    grid_spacing: float   # m

    def __post_init__(self):
        for name in ("v_max", "delta_t", "margin", "grid_spacing"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.grid_spacing >= self.search_radius:
            raise InfeasibleConfigError(
                f"grid spacing {self.grid_spacing} must be below the search radius "
                f"{self.search_radius}"
            )

    @property
    def search_radius(self) -> float:
        return self.v_max * self.delta_t + self.margin


@dataclass
class TrackState:
    prev_estimate: Point
    step: int = 0
    blind: bool = False

    def __post_init__(self):
        self.prev_estimate = as_point(self.prev_estimate)
        if self.step < 0:
            raise ValueError("step must be >= 0")


# boundary slack so that R being an exact multiple of the spacing keeps the
# rim candidates despite rounding (e.g. 20 * 0.05 = 1.0000000000000002)
_RIM_EPS = 1e-9


def grid_array(center: Point, cfg: TrackerConfig) -> np.ndarray:
    """Candidate lattice as an (G, 2) array, ascending y then ascending x."""
    center = as_point(center)
    r = cfg.search_radius
    dg = cfg.grid_spacing
    n = int(math.floor(r / dg + _RIM_EPS))
    limit = r * r * (1.0 + 1e-12) + _RIM_EPS
    rows = []
    for iy in range(-n, n + 1):
        for ix in range(-n, n + 1):
            dx = ix * dg
            dy = iy * dg
            if dx * dx + dy * dy <= limit:
                rows.append((center.x + dx, center.y + dy))
    return np.array(rows, dtype=np.float64)


def build_grid(center: Point, cfg: TrackerConfig) -> list[Point]:
    """Search lattice anchored at ``center`` (itself always a lattice point)."""
    return [Point(x, y) for x, y in grid_array(center, cfg)]


def objective(rx: RxBlock | np.ndarray, predicted: np.ndarray) -> float:
    """Sum over subcarriers of |h_m^H z_m| / (||h_m|| ||z_m||), in [0, M].

    Subcarriers with a zero-norm prediction or observation contribute 0,
    so candidates inside predicted blind spots stay legal grid points.
    """
    z = rx.values if isinstance(rx, RxBlock) else np.asarray(rx)
    h = np.asarray(predicted)
    if z.shape != h.shape:
        raise ValueError(f"shape mismatch: rx {z.shape} vs predicted {h.shape}")
    total = 0.0
    for m in range(z.shape[0]):
        hn = np.linalg.norm(h[m])
        zn = np.linalg.norm(z[m])
        if hn == 0.0 or zn == 0.0:
            continue
        total += abs(np.vdot(h[m], z[m])) / (hn * zn)
    return float(total)


def estimate_step(
    rx: RxBlock,
    state: TrackState,
    cfg: TrackerConfig,
    known_surfaces: Sequence[Surface],
    array: ArrayGeometry,
    ofdm: OfdmConfig,
    model: str = "nf",
) -> tuple[Point, float, bool]:
    """One tracking step: (estimate, best objective, blind flag).

    Ties go to the first candidate in grid order (ascending y then x). When
    every candidate scores exactly 0 (no predicted path anywhere), the
    previous estimate is held and the blind flag raised.
    """
    cand = grid_array(state.prev_estimate, cfg)
    scores = step_scores(model, cand, array, known_surfaces, ofdm, rx.values)
    best = int(np.argmax(scores))
    value = float(scores[best])
    if value == 0.0:
        return state.prev_estimate, 0.0, True
    return Point(cand[best, 0], cand[best, 1]), value, False


def predict_channel(
    p: Point,
    known_surfaces: Sequence[Surface],
    array: ArrayGeometry,
    ofdm: OfdmConfig,
    model: str = "nf",
) -> np.ndarray:
    """Predicted channel at a single candidate (scalar reference path)."""
    if model == "nf":
        return channel_matrix(p, array, known_surfaces, ofdm)
    if model == "ff":
        return ff_channel_matrix(p, array, known_surfaces, ofdm)
    raise ValueError(f"unknown channel model {model!r} (expected 'nf' or 'ff')")


class CosineGridTracker(BaseEstimator):
    """Sequential position estimator over received uplink blocks.

    scikit-learn flavored wrapper around :func:`estimate_step`: constructor
    arguments are hyperparameters (``get_params``/``set_params``/``clone``
    work as usual), ``fit`` binds the known initial position, and ``predict``
    maps a (K, M, N) stack of received blocks to (K, 2) position estimates,
    updating the internal state step by step.

    Attributes set by ``predict``: ``objectives_``, ``blind_``, ``state_``.
    """

    def __init__(
        self,
        known_surfaces: Sequence[Surface] = (),
        array: Optional[ArrayGeometry] = None,
        ofdm: Optional[OfdmConfig] = None,
        model: str = "nf",
        v_max: float = 10.0,
        delta_t: float = 0.05,
        margin: float = 0.5,
        grid_spacing: float = 0.05,
    ):
        self.known_surfaces = known_surfaces
        self.array = array
        self.ofdm = ofdm
        self.model = model
        self.v_max = v_max
        self.delta_t = delta_t
        self.margin = margin
        self.grid_spacing = grid_spacing

    def _config(self) -> TrackerConfig:
        return TrackerConfig(self.v_max, self.delta_t, self.margin, self.grid_spacing)

    def fit(self, X=None, y=None, *, initial_position=None):
        """Bind the known initial position; X and y are ignored."""
        if initial_position is None:
            raise ValueError("initial_position is required (known starting point)")
        if self.array is None or self.ofdm is None:
            raise ValueError("array and ofdm must be set before fitting")
        self._config()  # validate hyperparameters
        if self.model not in ("nf", "ff"):
            raise ValueError(f"unknown channel model {self.model!r}")
        self.initial_position_ = as_point(initial_position)
        return self

    def predict(self, Z) -> np.ndarray:
        """Track through blocks Z of shape (K, M, N); returns (K, 2) estimates."""
        if not hasattr(self, "initial_position_"):
            raise ValueError("tracker is not fitted; call fit(initial_position=...)")
        Z = np.asarray(Z, dtype=np.complex128)
        if Z.ndim == 2:
            Z = Z[None, :, :]
        cfg = self._config()
        state = TrackState(self.initial_position_)
        estimates = np.zeros((Z.shape[0], 2))
        objectives = np.zeros(Z.shape[0])
        blind = np.zeros(Z.shape[0], dtype=bool)
        for k in range(Z.shape[0]):
            rx = RxBlock(Z[k], k + 1)
            est, val, bl = estimate_step(
                rx, state, cfg, self.known_surfaces, self.array, self.ofdm, self.model
            )
            estimates[k] = (est.x, est.y)
            objectives[k] = val
            blind[k] = bl
            state = TrackState(est, state.step + 1, bl)
        self.objectives_ = objectives
        self.blind_ = blind
        self.state_ = state
        return estimates
