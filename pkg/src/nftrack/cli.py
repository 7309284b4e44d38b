"""Command-line entry point.

Subcommands: track, rmse-map, sweep-eta, bench. All results go to CSV with
floats at 9 significant digits; every command is deterministic under a fixed
seed. Exit codes: 0 success, 2 malformed scenario, 3 infeasible
configuration, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from pathlib import Path

import numba
import numpy as np

from .engine import full_mask
from .propagation import AwarenessSet
from .scenario import (
    Scenario,
    map_positions,
    rmse_map,
    rng_for,
    run_tracking,
    sample_awareness,
    sweep_eta,
)
from .scenario_file import ScenarioFileError, load_scenario
from .tracker import InfeasibleConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4

RESULT_SCHEMA_VERSION = 1

# stream tag for CLI-level awareness sampling
_TAG_CLI_AW = 17


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# schema_version={RESULT_SCHEMA_VERSION}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    out.write_text("\n".join(lines) + "\n")


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        sc = dataclasses.replace(sc, seed=args.seed)
    if getattr(args, "zero_noise", False):
        sig = dataclasses.replace(sc.signal, noiseless=True)
        sc = dataclasses.replace(sc, signal=sig)
    return sc


def _awareness(sc: Scenario, eta: float) -> AwarenessSet:
    if not 0.0 <= eta <= 1.0:
        raise ScenarioFileError(f"--eta must be in [0, 1], got {eta}")
    return sample_awareness(sc.environment, eta, rng_for(sc.seed, _TAG_CLI_AW))


def _setup_threads(args) -> None:
    threads = getattr(args, "threads", None)
    if threads is None:
        env = os.environ.get("NF_TRACKER_THREADS")
        if env:
            threads = int(env)
    if threads is not None:
        threads = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(threads)


def cmd_track(args) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    awareness = _awareness(sc, args.eta)
    records = run_tracking(sc, awareness, args.model)
    rows = []
    for r in records:
        elapsed = 0.0 if args.zero_elapsed else r.elapsed
        rows.append([
            r.step, r.truth.x, r.truth.y, r.estimate.x, r.estimate.y,
            r.error, r.objective, r.blind, elapsed,
        ])
    _write_csv(
        args.out,
        ["step", "truth_x", "truth_y", "est_x", "est_y", "error_m",
         "objective", "blind", "elapsed_s"],
        rows,
    )
    tracked = [r for r in records if not r.blind]
    mean_err = float(np.mean([r.error for r in tracked])) if tracked else float("nan")
    print(f"tracked {len(records)} steps ({len(records) - len(tracked)} blind), "
          f"mean error over tracked steps {mean_err:.4g} m -> {args.out}")
    return EXIT_OK


def cmd_rmse_map(args) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    if not 0.0 <= args.eta <= 1.0:
        raise ScenarioFileError(f"--eta must be in [0, 1], got {args.eta}")
    positions = map_positions(sc.environment, args.cell)
    cells = rmse_map(sc, positions, args.trials, args.model, args.eta)
    rows = []
    for c in cells:
        rows.append([
            c.position.x, c.position.y,
            "" if c.rmse is None else c.rmse,
            c.trackable,
        ])
    _write_csv(args.out, ["x", "y", "rmse_m", "trackable"], rows)
    vals = [c.rmse for c in cells if c.rmse is not None and np.isfinite(c.rmse)]
    print(f"map of {len(cells)} cells ({len(vals)} trackable), "
          f"mean RMSE {np.mean(vals):.4g} m, max {np.max(vals):.4g} m -> {args.out}")
    return EXIT_OK


def cmd_sweep_eta(args) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in ("nf", "ff"):
            raise ScenarioFileError(f"--models entries must be nf or ff, got {m!r}")
    rows_out = sweep_eta(sc, args.draws, models, cell=args.cell)
    rows = [[r.eta, r.model, r.rmse, r.n_draws] for r in rows_out]
    _write_csv(args.out, ["eta", "model", "rmse_m", "n_draws"], rows)
    for r in rows_out:
        print(f"eta={r.eta:.3f} model={r.model} rmse={r.rmse:.4g} m ({r.n_draws} draws)")
    print(f"-> {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    awareness = AwarenessSet(tuple(range(sc.environment.n_surfaces)))
    # warm-up pass compiles the kernels before any timing is taken
    warm = dataclasses.replace(sc, trajectory=sc.trajectory[:2])
    run_tracking(warm, awareness, "nf")
    t0 = time.perf_counter()
    records = run_tracking(sc, awareness, "nf")
    total = time.perf_counter() - t0
    steps = [r.elapsed for r in records]
    from .tracker import grid_array
    n_grid = grid_array(sc.trajectory[0], sc.tracker).shape[0]
    print(f"steps:            {len(steps)}")
    print(f"grid points:      {n_grid}")
    print(f"threads:          {numba.get_num_threads()}")
    print(f"mean step time:   {np.mean(steps):.6f} s")
    print(f"max step time:    {np.max(steps):.6f} s")
    print(f"total wall time:  {total:.3f} s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nftrack",
        description="Near-field environment-aware UE tracking simulator",
    )
    p.add_argument("--threads", type=int, default=None,
                   help="numba thread count (default: all cores; env NF_TRACKER_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="track the scenario trajectory, write per-step CSV")
    t.add_argument("scenario", help="scenario JSON path, or 'reference'")
    t.add_argument("--eta", type=float, default=1.0, help="awareness level in [0, 1]")
    t.add_argument("--model", choices=["nf", "ff"], default="nf")
    t.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    t.add_argument("--out", required=True, help="output CSV path")
    t.add_argument("--zero-noise", action="store_true", help="disable thermal noise")
    t.add_argument("--zero-elapsed", action="store_true",
                   help="write 0 in elapsed_s for byte-reproducible output")
    t.set_defaults(func=cmd_track)

    m = sub.add_parser("rmse-map", help="per-position steady-state RMSE map CSV")
    m.add_argument("scenario")
    m.add_argument("--eta", type=float, default=1.0)
    m.add_argument("--model", choices=["nf", "ff"], default="nf")
    m.add_argument("--trials", type=int, default=50)
    m.add_argument("--cell", type=float, default=1.0, help="map cell size in meters")
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--out", required=True)
    m.add_argument("--zero-noise", action="store_true")
    m.set_defaults(func=cmd_rmse_map)

    s = sub.add_parser("sweep-eta", help="RMSE versus awareness level CSV")
    s.add_argument("scenario")
    s.add_argument("--draws", type=int, default=50, help="awareness draws per eta")
    s.add_argument("--models", default="nf,ff", help="comma list of nf,ff")
    s.add_argument("--cell", type=float, default=2.0, help="evaluation cell size in meters")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep_eta)

    b = sub.add_parser("bench", help="per-step timing report at full awareness")
    b.add_argument("scenario")
    b.add_argument("--seed", type=int, default=None)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_threads(args)
        return args.func(args)
    except ScenarioFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleConfigError as e:
        print(f"infeasible configuration: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as e:  # pragma: no cover - defensive
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
