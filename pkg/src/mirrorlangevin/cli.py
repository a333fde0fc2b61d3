"""Command-line entry point: run presets, list them, or run the check suite."""

import argparse
import sys
import tempfile

from mirrorlangevin import harness
from mirrorlangevin.presets import PRESETS


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirrorlangevin",
        description="Mirror-Langevin sampling experiments with CSV output",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named experiment preset")
    run.add_argument("--preset", help="preset name (see list-presets)")
    run.add_argument("--config", help="TOML config file")
    run.add_argument("--out", help="output directory (default: out)")
    run.add_argument("--seed", type=int, help="base seed (default: 0)")
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a preset parameter; repeatable",
    )

    sub.add_parser("list-presets", help="print the preset catalog")
    sub.add_parser(
        "check", help="run the inequality suite; exit code reflects pass/fail"
    )
    return parser


def _cmd_run(args) -> int:
    overrides = dict(harness.parse_override(o) for o in args.override)
    config = harness.parse_config(
        args.config,
        preset=args.preset,
        out_dir=args.out,
        seed=args.seed,
        overrides=overrides,
    )
    summary = harness.run_experiment(config)
    print(
        f"{config.preset}: {summary['rows']} metric rows -> {summary['out_dir']}"
    )
    for failure in summary["failures"]:
        print(f"  failed run: {failure}", file=sys.stderr)
    return 1 if summary["all_failed"] else 0


def _cmd_list_presets() -> int:
    width = max(len(name) for name in PRESETS)
    for name in sorted(PRESETS):
        preset = PRESETS[name]
        print(f"{name:<{width}}  {preset.description}")
        keys = ("runs", "steps", "burn_in", "h", "h_grid", "beta", "gamma", "dimension")
        shown = {k: preset.params[k] for k in keys if k in preset.params}
        if shown:
            print(f"{'':<{width}}  defaults: " + ", ".join(f"{k}={v}" for k, v in shown.items()))
        if preset.overridable:
            print(f"{'':<{width}}  overridable: " + ", ".join(preset.overridable))
    return 0


def _cmd_check() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        config = harness.ExperimentConfig(preset="inequality-suite", out_dir=tmp)
        summary = harness.run_experiment(config)
    checks = summary["meta"]["checks"]
    failed = False
    for name, result in checks.items():
        if name == "all_passed" or not isinstance(result, dict):
            continue
        status = "PASS" if result["passed"] else "FAIL"
        failed = failed or not result["passed"]
        print(f"{status}  {name}")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-presets":
            return _cmd_list_presets()
        if args.command == "check":
            return _cmd_check()
    except (harness.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
