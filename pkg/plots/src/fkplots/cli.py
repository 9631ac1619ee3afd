"""Command-line figure rendering: fkplot --kind KIND --in DIR --out PATH."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, RenderError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fkplot", description="Render figures from solver CSV outputs")
    parser.add_argument("--kind", required=True, choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="in_dir", required=True, type=Path, help="directory with CSV inputs")
    parser.add_argument("--out", required=True, type=Path, help="output image path")
    args = parser.parse_args(argv)
    try:
        path = render(args.kind, args.in_dir, args.out)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
