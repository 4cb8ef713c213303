"""Command-line front end for the scenario runner.

One subcommand per scenario module plus ``suite``, which runs every
bundled scenario in sequence.  Without ``--config`` a subcommand runs
its bundled default; with one it runs the given file, provided the
file's module selector matches the subcommand.

Exit status: 0 when every in-scenario assertion passed, 1 when any
failed (the failing invariant names are printed), 2 for a config
problem (the diagnostic names the field and line).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, scenarios

_MODULES = ("relax", "typicality", "functional", "kinetic", "bernoulli",
            "trajectory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilotwave",
        description="Run configured pilot-wave relaxation scenarios.")
    parser.add_argument("--version", action="version",
                        version=f"pilotwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, metavar="PATH",
                       help="scenario config file (default: the bundled "
                            "scenario for this subcommand)")
        p.add_argument("--out", type=Path, default=Path("pilotwave_out"),
                       metavar="DIR",
                       help="output root; artifacts land in DIR/<name>/ "
                            "(default: %(default)s)")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override the config's [numeric] seed")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="workers for trial-parallel stages "
                            "(default: %(default)s)")
        p.add_argument("--strict", action="store_true",
                       help="escalate warnings raised during the run "
                            "to errors")

    for module in _MODULES:
        p = sub.add_parser(
            module,
            help=f"run a '{module}' scenario "
                 f"(default: {scenarios.default_scenario_for(module).stem})")
        add_common(p)

    p = sub.add_parser("suite", help="run every bundled scenario")
    add_common(p)
    return parser


def _run_one(config_path: Path, expect_module: str | None,
             args) -> scenarios.ScenarioResult:
    scen = scenarios.load_scenario(config_path)
    if expect_module is not None and scen.module != expect_module:
        raise scenarios.ConfigError(
            f"{config_path}: scenario module is {scen.module!r}; "
            f"run it through the {scen.module!r} subcommand")
    result = scenarios.run_scenario(scen, args.out, seed=args.seed,
                                    jobs=args.jobs, strict=args.strict)
    status = "ok" if result.passed else "FAILED"
    print(f"{result.name}: {status} in {result.wall_seconds:.1f}s "
          f"(budget {result.budget_seconds:g}s) -> {result.out_dir}")
    for rec in result.assertions:
        mark = "pass" if rec.passed else "FAIL"
        print(f"  [{mark}] {rec.name}: {rec.detail}")
    return result


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            results = []
            for name in scenarios.bundled_scenario_names():
                if args.config is not None:
                    raise scenarios.ConfigError(
                        "suite runs the bundled set; --config is not "
                        "accepted here")
                results.append(_run_one(scenarios.bundled_scenario_path(name),
                                        None, args))
            failed = [f"{r.name}:{n}" for r in results for n in r.failed]
        else:
            config = args.config
            if config is None:
                config = scenarios.default_scenario_for(args.command)
            result = _run_one(config, args.command, args)
            failed = result.failed
    except scenarios.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if failed:
        print("failed assertions: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
