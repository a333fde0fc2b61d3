"""Command-line entry point: render figures from harness CSV directories."""

import argparse
import sys

from plots.figures import FIGURE_KINDS, RenderError, render_figures


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from experiment CSV outputs"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render figures from CSV directories")
    render.add_argument(
        "--figures",
        default="all",
        help="'all' or one of: " + ", ".join(FIGURE_KINDS),
    )
    render.add_argument("--csv", required=True, help="directory holding harness outputs")
    render.add_argument("--out", required=True, help="directory for image files")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        written = render_figures(args.csv, args.out, args.figures)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
