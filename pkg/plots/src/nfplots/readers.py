"""Strict readers for the tracker's result CSVs and scenario JSON.

These are pure file parsers: no physics is recomputed here, so the figures
render from committed CSV fixtures alone.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class SchemaError(ValueError):
    """Input file does not match the expected result schema."""


TRACK_COLUMNS = ["step", "truth_x", "truth_y", "est_x", "est_y",
                 "error_m", "objective", "blind", "elapsed_s"]
MAP_COLUMNS = ["x", "y", "rmse_m", "trackable"]
SWEEP_COLUMNS = ["eta", "model", "rmse_m", "n_draws"]


def _read_rows(path: str | Path, expected: list[str]) -> list[dict]:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"input file not found: {p}")
    lines = [ln for ln in p.read_text().splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise SchemaError(f"{p}: empty CSV")
    reader = csv.DictReader(lines)
    if reader.fieldnames != expected:
        raise SchemaError(
            f"{p}: expected columns {expected}, found {reader.fieldnames}"
        )
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{p}: no data rows")
    return rows


@dataclass
class TrackData:
    truth: list[tuple[float, float]]
    estimate: list[tuple[float, float]]
    blind: list[bool]
    error: list[float]


def read_track(path: str | Path) -> TrackData:
    rows = _read_rows(path, TRACK_COLUMNS)
    return TrackData(
        truth=[(float(r["truth_x"]), float(r["truth_y"])) for r in rows],
        estimate=[(float(r["est_x"]), float(r["est_y"])) for r in rows],
        blind=[r["blind"] == "1" for r in rows],
        error=[float(r["error_m"]) for r in rows],
    )


@dataclass
class MapData:
    x: list[float]
    y: list[float]
    rmse: list[float | None]  # None marks a non-trackable cell


def read_map(path: str | Path) -> MapData:
    rows = _read_rows(path, MAP_COLUMNS)
    rmse: list[float | None] = []
    for r in rows:
        if r["trackable"] == "1" and r["rmse_m"] != "":
            rmse.append(float(r["rmse_m"]))
        else:
            rmse.append(None)
    return MapData(
        x=[float(r["x"]) for r in rows],
        y=[float(r["y"]) for r in rows],
        rmse=rmse,
    )


@dataclass
class SweepData:
    # model -> list of (eta, rmse) sorted by eta
    curves: dict[str, list[tuple[float, float]]]


def read_sweep(path: str | Path) -> SweepData:
    rows = _read_rows(path, SWEEP_COLUMNS)
    curves: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        curves.setdefault(r["model"], []).append((float(r["eta"]), float(r["rmse_m"])))
    for pts in curves.values():
        pts.sort()
    return SweepData(curves)


@dataclass
class SceneOutline:
    surfaces: list[tuple[tuple[float, float], tuple[float, float]]]
    array_origin: tuple[float, float]
    array_span: float


def read_scene(path: str | Path) -> SceneOutline:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"scenario file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{p}: invalid JSON: {e}") from e
    try:
        surfaces = [
            (tuple(s["a"]), tuple(s["b"])) for s in data["surfaces"]
        ]
        arr = data["array"]
        origin = tuple(arr["origin"])
        span = float(arr["n_elements"]) * float(arr["spacing"])
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{p}: not a scenario file ({e})") from e
    return SceneOutline(surfaces, origin, span)
