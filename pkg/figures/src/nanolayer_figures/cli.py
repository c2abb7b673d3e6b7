"""``make-figures``: render the standard figure set from run directories.

Usage::

    make-figures --runs RUN_DIR [RUN_DIR ...] --fig {1..6|all} --out DIR
                 [--format {svg,png}]

Run directories are identified by their manifests; each figure pulls
the scenarios it needs and aborts if one is missing, if any file's
config hash disagrees with its manifest, or if the data violate the
physical checks built into the recipe.
"""

from __future__ import annotations

import argparse
import sys

from .io import FigureDataError, discover
from .recipes import RECIPES, render

__all__ = ["main"]


def _fig_ids(value: str) -> list[int]:
    if value == "all":
        return sorted(RECIPES)
    try:
        fig_id = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--fig must be one of {sorted(RECIPES)} or 'all', "
            f"got {value!r}")
    if fig_id not in RECIPES:
        raise argparse.ArgumentTypeError(f"no figure {fig_id}; "
                                         f"choose from {sorted(RECIPES)}")
    return [fig_id]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="make-figures",
        description="Render the standard figures from nanolayer run "
                    "directories.")
    parser.add_argument("--runs", nargs="+", required=True,
                        metavar="DIR", help="run directories to draw from")
    parser.add_argument("--fig", type=_fig_ids, required=True,
                        help="figure number (1-6) or 'all'")
    parser.add_argument("--out", required=True, metavar="DIR",
                        help="output directory")
    parser.add_argument("--format", choices=("svg", "png"), default="svg",
                        help="image format (default: svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        runs = discover(args.runs)
        for fig_id in args.fig:
            path = render(fig_id, runs, args.out, args.format)
            print(path)
    except FigureDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
