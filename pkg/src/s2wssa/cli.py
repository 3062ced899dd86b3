"""Command-line driver.

    s2wssa synth SPEC --L 64 --out img.sph --mask truth.msk
    s2wssa noise img.sph --snr 30 --seed 1 --out noisy.sph
    s2wssa segment noisy.sph wssa-d --N 5 --report iters.csv --out mask.msk
    s2wssa roundtrip --L 32 --family hybrid --ltrans 16
    s2wssa plot mask.msk --out mask.pgm --width 512
    s2wssa report a.csv b.csv

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical-contract
violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from s2wssa import harmonic as hm
from s2wssa.errors import ContractViolation, InvalidInputError, InvalidParameterError
from s2wssa.grid import SPH_MAGIC, SphericalImage
from s2wssa.mollweide import rasterise
from s2wssa.ops import MSK_MAGIC, BinaryMask, add_noise, dice, kmeans_intensity, noise_sigma
from s2wssa.segmentation import WssaConfig, run_wssa
from s2wssa.synthdata import make_phantom, parse_phantom_config, ridge_network_spec, two_caps_spec
from s2wssa.tiling import build_family
from s2wssa.transform import analyse, analyse_hybrid, build_hybrid_family, synthesise, synthesise_hybrid

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CONTRACT = 0, 1, 2, 3

PRESETS = {"two_caps": two_caps_spec, "ridge_network": ridge_network_spec}
METHODS = {"kmeans": None, "wssa-a": "axisym", "wssa-d": "directional", "wssa-h": "hybrid"}

log = logging.getLogger("s2wssa")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class IOFailure(Exception):
    pass


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from None


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None


def _write_text(path, text: str) -> None:
    _write_bytes(path, text.encode("utf-8"))


def load_image(path) -> SphericalImage:
    """Read an SPH1 file or the text format (``.txt``)."""
    data = _read_bytes(path)
    try:
        if str(path).endswith(".txt"):
            return SphericalImage.from_text(data.decode("utf-8"))
        return SphericalImage.from_bytes(data)
    except (InvalidInputError, UnicodeDecodeError, ValueError) as exc:
        raise IOFailure(f"{path}: {exc}") from None


def load_any(path):
    """Image or mask, chosen by the file magic."""
    data = _read_bytes(path)
    try:
        if data[:4] == MSK_MAGIC:
            return BinaryMask.from_bytes(data)
        if data[:4] == SPH_MAGIC:
            return SphericalImage.from_bytes(data)
        return SphericalImage.from_text(data.decode("utf-8"))
    except (InvalidInputError, UnicodeDecodeError, ValueError) as exc:
        raise IOFailure(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.preset:
        spec = PRESETS[args.preset]()
    else:
        try:
            text = _read_bytes(args.spec).decode("utf-8")
        except UnicodeDecodeError:
            raise IOFailure(f"{args.spec}: not a text file") from None
        spec = parse_phantom_config(text)
    image, truth = make_phantom(spec, args.L)
    _write_bytes(args.out, image.to_bytes())
    if args.mask:
        _write_bytes(args.mask, truth.to_bytes())
    return EXIT_OK


def cmd_noise(args) -> int:
    image = load_image(args.input)
    noisy = add_noise(image, args.snr, seed=args.seed)
    _write_bytes(args.out, noisy.to_bytes())
    return EXIT_OK


def _kmeans_csv(ms: float | None) -> str:
    return "iter,unclassified,a,b,ms\n0,,,," + ("" if ms is None else f"{ms:.3f}") + "\n"


def cmd_segment(args) -> int:
    image = load_image(args.input)
    if args.L is not None and args.L != image.L:
        raise InvalidParameterError(f"--L {args.L} does not match the image band limit {image.L}")
    if args.method == "kmeans":
        t0 = time.perf_counter()
        mask, degenerate = kmeans_intensity(image.clamp(0.0, 1.0))
        ms = 1e3 * (time.perf_counter() - t0)
        if degenerate:
            print("warning: constant image, k-means degenerate", file=sys.stderr)
        csv_text = _kmeans_csv(None if args.no_timing else ms)
        summary = "kmeans"
    else:
        sigma = args.sigma if args.sigma is not None else noise_sigma(image, args.snr)
        cfg = WssaConfig(
            epsilon=args.eps,
            lambda_bar=args.lambda_bar if args.lambda_bar is not None else sigma / 4,
            lam=args.lam if args.lam is not None else sigma / 100,
            variant=METHODS[args.method],
            L=args.L, B=args.B, J_min=args.jmin, N=args.N, L_trans=args.ltrans,
            max_iter=args.max_iter, final_threshold_trigger=args.trigger,
        )
        report = run_wssa(image, cfg)
        mask = report.mask
        csv_text = report.to_csv(timing=not args.no_timing)
        summary = (f"{args.method}: {report.status} after {report.iterations} iterations, "
                   f"{report.total_time:.2f} s")
    _write_bytes(args.out, mask.to_bytes())
    if args.report:
        _write_text(args.report, csv_text)
    if args.truth:
        truth = load_any(args.truth)
        if not isinstance(truth, BinaryMask):
            raise IOFailure(f"{args.truth}: not a mask file")
        summary += f", dice {dice(mask, truth):.4f}"
    print(summary)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    rng = np.random.default_rng(args.seed)
    image = hm.sht_inverse(hm.random_coeffs(args.L, rng))
    if args.family == "hybrid":
        ltrans = args.ltrans if args.ltrans is not None else args.L // 2
        fam = build_hybrid_family(args.L, ltrans, args.B, args.jmin, args.N or 3)
        back = synthesise_hybrid(analyse_hybrid(image, fam))
    else:
        kind = {"axisym": "axisymmetric"}.get(args.family, args.family)
        fam = build_family(args.L, kind, args.B, args.jmin, args.N)
        back = synthesise(analyse(image, fam))
    err = float(np.max(np.abs(back.values - image.values)) / np.max(np.abs(image.values)))
    print(f"max relative reconstruction error: {err:.3e}")
    if not err <= args.tol:
        raise ContractViolation(f"round-trip error {err:.3e} exceeds tolerance {args.tol:.1e}")
    return EXIT_OK


def cmd_plot(args) -> int:
    obj = load_any(args.input)
    image = obj.as_image() if isinstance(obj, BinaryMask) else obj
    _write_bytes(args.out, rasterise(image, args.width).to_pgm())
    return EXIT_OK


def _read_iteration_csv(path):
    try:
        text = _read_bytes(path).decode("utf-8")
        rows = list(csv.DictReader(text.splitlines()))
        if not rows or "unclassified" not in rows[0] or "ms" not in rows[0]:
            raise ValueError("not an iteration report")
        counts = [r["unclassified"] for r in rows if r["unclassified"]]
        times = [float(r["ms"]) for r in rows if r["ms"]]
    except (UnicodeDecodeError, ValueError, TypeError) as exc:
        raise IOFailure(f"{path}: {exc}") from None
    seconds = sum(times) / 1e3 if times else None
    return counts, seconds, text


def merge_reports(columns: dict) -> str:
    """Aligned table: one ``|Lambda^(i)|`` row per iteration, then a time row."""
    names = list(columns)
    depth = max((len(c[0]) for c in columns.values()), default=0)
    table = [[""] + names]
    for i in range(depth):
        row = [f"|Lambda^({i})|"]
        for name in names:
            counts = columns[name][0]
            row.append(counts[i] if i < len(counts) else "-")
        table.append(row)
    table.append(["Time (s)"] + ["-" if columns[n][1] is None else f"{columns[n][1]:.3f}"
                                 for n in names])
    widths = [max(len(r[k]) for r in table) for k in range(len(table[0]))]
    lines = ["  ".join(cell.rjust(w) if k else cell.ljust(w) for k, (cell, w) in
                       enumerate(zip(row, widths))).rstrip() for row in table]
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    parsed = {}
    for path in args.csv:
        name = Path(path).stem
        while name in parsed:
            name += "'"
        parsed[name] = _read_iteration_csv(path)
    if len(parsed) == 1:
        out = next(iter(parsed.values()))[2]
    else:
        out = merge_reports({k: v[:2] for k, v in parsed.items()})
    if args.out:
        _write_text(args.out, out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="s2wssa", description="Wavelet segmentation of spherical images.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a phantom image and its ground-truth mask")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("spec", nargs="?", help="phantom config file (key = value lines)")
    src.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--L", type=int, default=64)
    s.add_argument("--out", required=True, help="output image (SPH1)")
    s.add_argument("--mask", help="output ground-truth mask (MSK1)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("noise", help="add white Gaussian noise at a given SNR")
    s.add_argument("input")
    s.add_argument("--snr", type=float, default=30.0, help="SNR in dB")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_noise)

    s = sub.add_parser("segment", help="segment an image")
    s.add_argument("input")
    s.add_argument("method", choices=list(METHODS))
    s.add_argument("--out", required=True, help="output mask (MSK1)")
    s.add_argument("--report", help="per-iteration CSV")
    s.add_argument("--truth", help="ground-truth mask; prints the Dice score")
    s.add_argument("--eps", type=float, default=0.04)
    s.add_argument("--snr", type=float, default=30.0,
                   help="noise level used for default thresholds when --sigma is absent")
    s.add_argument("--sigma", type=float)
    s.add_argument("--lambda-bar", dest="lambda_bar", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--L", type=int)
    s.add_argument("--B", type=float, default=2.0)
    s.add_argument("--jmin", type=int, default=2)
    s.add_argument("--N", type=int, default=5)
    s.add_argument("--ltrans", type=int)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=50)
    s.add_argument("--trigger", type=int, default=0,
                   help="finish with one global threshold once this few pixels remain")
    s.add_argument("--no-timing", dest="no_timing", action="store_true",
                   help="leave the ms column empty so reports are byte-reproducible")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("roundtrip", help="wavelet transform self-test")
    s.add_argument("--L", type=int, default=32)
    s.add_argument("--family", choices=["axisym", "directional", "curvelet", "hybrid"],
                   default="axisym")
    s.add_argument("--N", type=int)
    s.add_argument("--ltrans", type=int)
    s.add_argument("--B", type=float, default=2.0)
    s.add_argument("--jmin", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("plot", help="Mollweide PGM of an image or mask")
    s.add_argument("input")
    s.add_argument("--out", required=True)
    s.add_argument("--width", type=int, default=512)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("report", help="merge iteration CSVs into one table")
    s.add_argument("csv", nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (InvalidParameterError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
