"""CLI: render one figure set from a completed run manifest."""

from __future__ import annotations

import argparse
import sys

from .manifest import SchemaError
from .render import FIGURE_IDS, FigureRecipe, render


def cli_entry(argv) -> int:
    ap = argparse.ArgumentParser(prog="ncamaps-figs")
    ap.add_argument("--manifest", required=True, help="path to a run manifest")
    ap.add_argument("--figure", required=True, choices=FIGURE_IDS)
    ap.add_argument("--out", required=True, help="output directory for images")
    args = ap.parse_args(argv)
    try:
        recipe = FigureRecipe(
            manifest_path=args.manifest, figure_id=args.figure, out_dir=args.out
        )
        written = render(recipe)
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not written:
        print("nothing to render: manifest lists no matching runs")
        return 0
    for path in written:
        print(f"wrote {path}")
    return 0


def main() -> None:
    sys.exit(cli_entry(sys.argv[1:]))


if __name__ == "__main__":
    main()
