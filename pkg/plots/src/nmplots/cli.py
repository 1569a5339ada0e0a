"""Command line front end.

Takes one or more result CSVs and an output directory and writes one image
per table. Styling can come from flags, from a JSON sidecar holding the same
fields, or from both, in which case flags win. Exit code 0 means every image
was written; 1 means a table or selector was rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .figures import FigureSpec, render
from .tables import read_table

_SPEC_KEYS = ("series", "x_label", "y_label", "log_x", "log_y", "title")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmplots", description="render result tables as figures"
    )
    parser.add_argument("--version", action="version", version=f"nmplots {__version__}")
    parser.add_argument("csv", nargs="+", help="result CSV path(s)")
    parser.add_argument(
        "--out-dir", default=".", help="directory for images (default: current)"
    )
    parser.add_argument(
        "--series",
        nargs="+",
        metavar="PATTERN",
        help="column-name patterns to plot (default: all series)",
    )
    parser.add_argument("--x-label", help="x axis text (default: inferred)")
    parser.add_argument("--y-label", help="y axis text (default: inferred)")
    parser.add_argument(
        "--log-x",
        choices=("auto", "on", "off"),
        default="auto",
        help="x axis scale (default: auto)",
    )
    parser.add_argument(
        "--log-y",
        choices=("auto", "on", "off"),
        default="auto",
        help="y axis scale (default: auto)",
    )
    parser.add_argument("--title", help="figure title (default: none)")
    parser.add_argument(
        "--spec",
        help="JSON sidecar with any of: " + ", ".join(_SPEC_KEYS),
    )
    return parser


def _tri(flag: str) -> bool | None:
    return None if flag == "auto" else flag == "on"


def _load_sidecar(path: str) -> dict:
    with open(path) as fh:
        loaded = json.load(fh)
    if not isinstance(loaded, dict):
        raise ValueError(f"{path}: spec sidecar must be a JSON object")
    unknown = sorted(set(loaded) - set(_SPEC_KEYS))
    if unknown:
        raise ValueError(f"{path}: unknown spec field(s) {', '.join(unknown)}")
    return loaded


def _spec_for(csv_path: str, out_dir: Path, args) -> FigureSpec:
    fields: dict = {}
    if args.spec is not None:
        fields.update(_load_sidecar(args.spec))
    if args.series is not None:
        fields["series"] = args.series
    if args.x_label is not None:
        fields["x_label"] = args.x_label
    if args.y_label is not None:
        fields["y_label"] = args.y_label
    if args.log_x != "auto":
        fields["log_x"] = _tri(args.log_x)
    if args.log_y != "auto":
        fields["log_y"] = _tri(args.log_y)
    if args.title is not None:
        fields["title"] = args.title
    if "series" in fields:
        fields["series"] = tuple(fields["series"])
    name = read_table(csv_path).metadata_dict().get("id") or Path(csv_path).stem
    return FigureSpec(
        csv_path=csv_path, out_path=out_dir / f"{name}.png", **fields
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        for csv_path in args.csv:
            image = render(_spec_for(csv_path, out_dir, args))
            print(f"wrote {image}")
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
