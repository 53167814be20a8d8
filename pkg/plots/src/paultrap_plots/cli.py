"""Batch figure rendering: one figure per invocation, no interactive windows."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paultrap-plots",
        description="Render a figure from paultrap experiment outputs")
    parser.add_argument("figure", choices=sorted(FIGURES))
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="experiment output directory")
    parser.add_argument("--out", required=True, help="output .png or .pdf path")
    args = parser.parse_args(argv)
    try:
        digest = render(args.figure, args.in_dir, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} (inputs {digest[:12]})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
