"""`plot` command: render tracker result CSVs to PNG + SVG figures."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_eta_curve, plot_rmse_map, plot_trajectory
from .readers import SchemaError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plot",
        description="Render nftrack result CSVs (trajectory, rmse_map, eta_curve)",
    )
    sub = p.add_subparsers(dest="kind", required=True)

    t = sub.add_parser("trajectory", help="true vs estimated path over the scene")
    t.add_argument("--csv", required=True)
    t.add_argument("--scenario", required=True)
    t.add_argument("--out", required=True)

    m = sub.add_parser("rmse_map", help="spatial RMSE heatmap")
    m.add_argument("--csv", required=True)
    m.add_argument("--scenario", required=True)
    m.add_argument("--out", required=True)

    e = sub.add_parser("eta_curve", help="RMSE versus awareness level")
    e.add_argument("--csv", required=True)
    e.add_argument("--scenario", required=False, default=None,
                   help="accepted for interface symmetry; not used")
    e.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "trajectory":
            plot_trajectory(args.csv, args.scenario, args.out)
        elif args.kind == "rmse_map":
            plot_rmse_map(args.csv, args.scenario, args.out)
        else:
            plot_eta_curve(args.csv, args.out)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
