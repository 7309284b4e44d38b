"""Strict JSON scenario files.

Every section and key is validated; unknown keys are rejected with an error
naming the key, so typos never silently fall back to defaults. Power enters
in dBm here and is converted to watts for the simulation core.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

from .geometry import Point, Segment
from .propagation import (
    ArrayGeometry,
    ConstantBeta,
    Environment,
    Fresnel,
    Surface,
    uniform_linear_array,
)
from .scenario import Scenario, resample_polyline
from .signal import OfdmConfig, SignalConfig
from .tracker import InfeasibleConfigError, TrackerConfig

SCHEMA_VERSION = 1


class ScenarioFileError(ValueError):
    """Malformed or inconsistent scenario file."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


class _Section:
    def __init__(self, data: dict, where: str):
        if not isinstance(data, dict):
            raise ScenarioFileError(f"{where}: expected an object")
        self._data = dict(data)
        self._where = where

    def take(self, key: str, required: bool = True, default=None):
        if key in self._data:
            return self._data.pop(key)
        if required:
            raise ScenarioFileError(f"{self._where}: missing required key '{key}'")
        return default

    def finish(self):
        if self._data:
            extra = sorted(self._data)
            raise ScenarioFileError(
                f"{self._where}: unknown key '{extra[0]}'"
                + (f" (and {len(extra) - 1} more)" if len(extra) > 1 else "")
            )


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFileError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _pair(value, where: str) -> Point:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioFileError(f"{where}: expected [x, y]")
    return Point(_number(value[0], where), _number(value[1], where))


def _parse_surface(item, index: int) -> Surface:
    sec = _Section(item, f"surfaces[{index}]")
    sid = sec.take("id")
    if not isinstance(sid, int) or isinstance(sid, bool):
        raise ScenarioFileError(f"surfaces[{index}]: 'id' must be an integer")
    a = _pair(sec.take("a"), f"surfaces[{index}].a")
    b = _pair(sec.take("b"), f"surfaces[{index}].b")
    refl = _Section(sec.take("reflect"), f"surfaces[{index}].reflect")
    model_name = refl.take("model")
    if model_name == "constant":
        model = ConstantBeta(_number(refl.take("beta"), f"surfaces[{index}].reflect.beta"))
    elif model_name == "fresnel":
        model = Fresnel(_number(refl.take("eps_r"), f"surfaces[{index}].reflect.eps_r"))
    else:
        raise ScenarioFileError(
            f"surfaces[{index}].reflect: unknown model {model_name!r} "
            "(expected 'constant' or 'fresnel')"
        )
    refl.finish()
    sec.finish()
    try:
        return Surface(sid, Segment(a, b), model)
    except ValueError as e:
        raise ScenarioFileError(f"surfaces[{index}]: {e}") from e


def parse_scenario(data: dict, where: str = "scenario") -> Scenario:
    top = _Section(data, where)
    version = top.take("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioFileError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )
    seed = top.take("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ScenarioFileError("'seed' must be a non-negative integer")

    raw_surfaces = top.take("surfaces")
    if not isinstance(raw_surfaces, list):
        raise ScenarioFileError("'surfaces' must be a list")
    surfaces = [_parse_surface(s, i) for i, s in enumerate(raw_surfaces)]

    arr = _Section(top.take("array"), "array")
    n_el = arr.take("n_elements")
    if not isinstance(n_el, int) or isinstance(n_el, bool) or n_el < 1:
        raise ScenarioFileError("array.n_elements must be a positive integer")
    spacing = _number(arr.take("spacing"), "array.spacing")
    origin = _pair(arr.take("origin"), "array.origin")
    orient_deg = _number(arr.take("orientation_deg", required=False, default=0.0), "array.orientation_deg")
    arr.finish()

    ofdm_sec = _Section(top.take("ofdm"), "ofdm")
    fc = _number(ofdm_sec.take("fc"), "ofdm.fc")
    bw = _number(ofdm_sec.take("bandwidth"), "ofdm.bandwidth")
    df = _number(ofdm_sec.take("delta_f"), "ofdm.delta_f")
    m_sub = ofdm_sec.take("m_subcarriers")
    if not isinstance(m_sub, int) or isinstance(m_sub, bool) or m_sub < 1:
        raise ScenarioFileError("ofdm.m_subcarriers must be a positive integer")
    explicit = ofdm_sec.take("subcarriers", required=False)
    ofdm_sec.finish()
    freqs = ()
    if explicit is not None:
        if not isinstance(explicit, list):
            raise ScenarioFileError("ofdm.subcarriers must be a list of frequencies")
        freqs = tuple(_number(f, "ofdm.subcarriers") for f in explicit)

    sig_sec = _Section(top.take("signal"), "signal")
    p_dbm = _number(sig_sec.take("tx_power_dbm"), "signal.tx_power_dbm")
    f_db = _number(sig_sec.take("noise_figure_db"), "signal.noise_figure_db")
    t_k = _number(sig_sec.take("temperature_k"), "signal.temperature_k")
    phase_error = sig_sec.take("phase_error", required=False, default="uniform")
    noiseless = sig_sec.take("noiseless", required=False, default=False)
    if not isinstance(noiseless, bool):
        raise ScenarioFileError("signal.noiseless must be a boolean")
    sig_sec.finish()

    trk = _Section(top.take("tracker"), "tracker")
    v_max = _number(trk.take("v_max"), "tracker.v_max")
    delta_t = _number(trk.take("delta_t"), "tracker.delta_t")
    margin = _number(trk.take("margin"), "tracker.margin")
    grid = _number(trk.take("grid_spacing"), "tracker.grid_spacing")
    trk.finish()

    traj = _Section(top.take("trajectory"), "trajectory")
    raw_wps = traj.take("waypoints")
    if not isinstance(raw_wps, list) or not raw_wps:
        raise ScenarioFileError("trajectory.waypoints must be a non-empty list")
    waypoints = [_pair(w, f"trajectory.waypoints[{i}]") for i, w in enumerate(raw_wps)]
    speed = _number(traj.take("speed"), "trajectory.speed")
    traj.finish()
    top.finish()

    if speed > v_max:
        raise ScenarioFileError(
            f"trajectory.speed {speed} exceeds tracker.v_max {v_max}"
        )
    try:
        env = Environment(tuple(surfaces))
        array = uniform_linear_array(n_el, spacing, origin, math.radians(orient_deg))
        ofdm = OfdmConfig(fc, bw, df, m_sub, freqs)
        sig = SignalConfig(
            tx_power=dbm_to_watts(p_dbm),
            noise_figure_db=f_db,
            temperature_k=t_k,
            phase_error=phase_error,
            noiseless=noiseless,
        )
        tracker = TrackerConfig(v_max, delta_t, margin, grid)
        trajectory = tuple(resample_polyline(waypoints, speed, delta_t))
        return Scenario(env, array, ofdm, sig, tracker, trajectory, seed)
    except (ScenarioFileError, InfeasibleConfigError):
        raise
    except ValueError as e:
        raise ScenarioFileError(str(e)) from e


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; the name 'reference' loads the packaged scene."""
    if str(path) == "reference":
        text = resources.files("nftrack").joinpath("data/reference.json").read_text()
    else:
        p = Path(path)
        if not p.exists():
            raise ScenarioFileError(f"scenario file not found: {p}")
        text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioFileError(f"invalid JSON: {e}") from e
    return parse_scenario(data)
