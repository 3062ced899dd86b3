"""Dump the harmonic tiling (kernel values per scale) of a wavelet family as CSV.

Usage: python3 scripts/tiling_dump.py [--L 64] [--kind axisymmetric] [--B 2] [--jmin 2]
"""

from __future__ import annotations

import argparse
import sys

from s2wssa.tiling import build_family, check_admissibility, tiling_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=64)
    ap.add_argument("--kind", default="axisymmetric",
                    choices=("axisymmetric", "directional", "curvelet"))
    ap.add_argument("--B", type=float, default=2.0)
    ap.add_argument("--jmin", type=int, default=2)
    ap.add_argument("--N", type=int, default=None)
    ap.add_argument("--out", help="output path (default stdout)")
    args = ap.parse_args()
    family = build_family(args.L, args.kind, args.B, args.jmin, args.N)
    text = tiling_csv(family)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"admissibility residual {check_admissibility(family):.2e}", file=sys.stderr)


if __name__ == "__main__":
    main()
