"""slicer-plots: render figures from slicesim run artifacts."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotError, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="slicer-plots")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        help="input artifact file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--window", type=int, default=200,
                        help="moving-average window (convergence)")
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(kind=args.kind, inputs=args.inputs, out=args.out,
                        window=args.window)
        out = render(spec)
    except PlotError as e:
        print(f"plot error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
