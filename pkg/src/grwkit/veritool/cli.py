"""Command line entry point: ``grwkit-verify <subcommand> --scenario FILE``."""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from ..errors import GeometryError, ScenarioError
from .runner import run_scenario

SUBCOMMANDS = {
    "identities": "algebraic identity suite on random symmetric matrices",
    "geometry": "pointwise geometry, operator cross-checks, elliptic point and umbilicity",
    "minkowski": "Minkowski integral formulae with grid refinement",
    "theorem": "hypothesis and conclusion ledgers of the rigidity results",
    "ncc": "convergence-condition margins and the constant-curvature test",
    "run": "every check listed in the scenario",
}


def bundled_scenarios() -> list[str]:
    root = resources.files("grwkit.veritool") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".scn"))


def _resolve(path: str) -> Path:
    """A scenario path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("grwkit.veritool") / "scenarios" / path
    if bundled.is_file():
        return Path(str(bundled))
    return p


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grwkit-verify",
        description="Numerical checks for spacelike hypersurfaces in GRW spacetimes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=name != "identities",
                       help="scenario JSON file, or the name of a bundled scenario")
        p.add_argument("--level", type=int, help="quadrature level (overrides the scenario)")
        p.add_argument("--seed", type=_seed, help="seed for random surfaces and matrix draws")
        p.add_argument("--out", default="grwkit-report", help="output directory")
        p.add_argument("--tol-scale", type=float, default=1.0,
                       help="multiply every tolerance band by this factor")
        p.add_argument("--orientation", choices=("future", "past"),
                       help="Gauss map orientation (overrides the scenario)")
    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in bundled_scenarios():
            print(name)
        return 0
    scenario = args.scenario or "identities.scn"
    family = None if args.command == "run" else args.command
    try:
        result = run_scenario(_resolve(scenario), args.out, family, args.level, args.seed,
                              args.orientation, args.tol_scale)
    except ScenarioError as exc:
        print(f"grwkit-verify: scenario error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"grwkit-verify: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for res in result.report["results"]:
        tag = res.get("verdict") or ""
        print(f"{res['check']:<20} {res['status']:<14} {tag}".rstrip())
    summary = result.report["summary"]
    print(f"geometry evaluations: {summary['geometry_evaluations']}")
    print(f"report: {Path(args.out) / 'report.json'}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
