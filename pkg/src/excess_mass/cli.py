"""Command-line front end: ``estimate``, ``benchmark``, ``oracle`` and ``coeffs``.

Exit codes: 0 success, 2 usage error, 3 input error (unreadable or malformed
file, unknown density), 4 numeric failure (overflow guard with no fallback).
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import bench, densities, kde
from .curves import curves_to_csv, curves_to_json
from .excess import OverflowGuardError
from .fourier import coefficients
from .quadrature import SupportBox

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4
BOX_MARGIN = 3.0  # data-driven box: sample range padded by this many bandwidths


class UsageError(Exception):
    pass


def _nu_grid(text):
    try:
        count, lo, hi = text.split(":")
        count, lo, hi = int(count), float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected count:lo:hi, got {text!r}") from None
    if count < 1 or lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError("need count >= 1 and 0 <= lo <= hi")
    return count, lo, hi


def _auto_or(kind):
    def parse(text):
        if text == "auto":
            return "auto"
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected 'auto' or a {kind.__name__}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError("must be positive")
        return value
    return parse


def _levels(args):
    if args.nu is not None:
        if args.nu < 0:
            raise UsageError("--nu must be >= 0")
        return np.array([args.nu])
    count, lo, hi = args.nu_grid or (100, 0.0, 1.0)
    return np.linspace(lo, hi, count)


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _curve_table(curves):
    names = [c.method for c in curves]
    lines = ["  ".join(["nu".rjust(10)] + [m.rjust(12) for m in names])]
    for i, nu in enumerate(curves[0].levels):
        lines.append("  ".join([f"{nu:10.5f}"] + [f"{c.values[i]:12.6f}" for c in curves]))
    return "\n".join(lines) + "\n"


def _format_curves(curves, fmt):
    if fmt == "json":
        return curves_to_json(curves) + "\n"
    if fmt == "table":
        return _curve_table(curves)
    return curves_to_csv(curves)


def cmd_estimate(args):
    if (args.data is None) == (args.density is None):
        raise UsageError("give exactly one of --data or --density")
    levels = _levels(args)
    if args.data is not None:
        sample = densities.read_sample_csv(args.data)
        h = kde.bandwidth_auto(sample) if args.bandwidth == "auto" else np.full(
            sample.dimension, args.bandwidth)
        pts = sample.points
        box = SupportBox(pts.min(axis=0) - BOX_MARGIN * h, pts.max(axis=0) + BOX_MARGIN * h)
    else:
        if args.n is None:
            raise UsageError("--density needs --n")
        spec = densities.get_density(args.density)
        sample = densities.sample(spec, args.n, args.seed)
        box = densities.support_box(spec)
    if sample.dimension > 2:
        raise UsageError("only 1- and 2-dimensional data are supported")
    methods = {"functional": ("functional",), "plugin": ("plugin",),
               "both": ("plugin", "functional")}[args.method]
    if "functional" in methods and sample.n < 3:
        raise UsageError("the functional estimator needs at least 3 points")
    boot_seed = np.random.SeedSequence([int(args.seed), 1])
    curves = bench.estimate_curves(sample, box, levels, methods, args.order, args.bandwidth,
                                   args.bootstrap, args.grid, boot_seed)
    _write(_format_curves([curves[m] for m in methods], args.format), args.out)


def _config_from_flags(args):
    if args.density is None or not args.n:
        raise UsageError("benchmark needs --config or --density with at least one --n")
    base = dict(
        density=args.density, replications=args.k, seed=args.seed,
        levels=args.nu_grid or (100, 0.0, 1.0), methods=tuple(args.methods.split(",")),
        order=args.order, bandwidth=args.bandwidth, bootstrap=args.bootstrap,
        grid=args.grid, workers=args.workers,
    )
    return [dict(base, n=n) for n in args.n]


def _config_from_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise densities.SampleFileError(f"cannot read config {path}: {exc}") from exc
    items = data if isinstance(data, list) else [data]
    out = []
    for item in items:
        sizes = item.get("n")
        for n in sizes if isinstance(sizes, list) else [sizes]:
            out.append(dict(item, n=n))
    return out


def cmd_benchmark(args):
    raw = _config_from_file(args.config) if args.config else _config_from_flags(args)
    configs = []
    for item in raw:
        try:
            configs.append(bench.ExperimentConfig.from_dict(item))
        except TypeError as exc:
            raise UsageError(f"invalid config: {exc}") from exc
    reports = [bench.run_experiment(c) for c in configs]
    _write(bench.format_report(reports, args.format), args.out)


def cmd_oracle(args):
    spec = densities.get_density(args.density)
    count, lo, hi = args.nu_grid or (100, 0.0, 1.0)
    curve = densities.oracle_curve(spec, np.linspace(lo, hi, count), args.grid)
    _write(_format_curves([curve], args.format), args.out)


def cmd_coeffs(args):
    c = coefficients(args.nu, args.order, args.scale).c
    if args.format == "json":
        text = json.dumps({"nu": args.nu, "order": args.order, "scale": args.scale,
                           "c": c.tolist()}) + "\n"
    else:
        text = "".join(f"{k},{float(v)!r}\n" for k, v in enumerate(c))
    _write(text, args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="excess-mass",
                                     description="Excess-mass estimation and benchmarking.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("csv", "json", "table"), default="csv"):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=formats, default=default)

    p = sub.add_parser("estimate", help="estimate an excess-mass curve from data")
    p.add_argument("--data", help="headerless CSV sample, one point per row")
    p.add_argument("--density", help="built-in density id or JSON spec path")
    p.add_argument("--n", type=int, help="sample size when drawing from --density")
    p.add_argument("--seed", type=int, default=0)
    level = p.add_mutually_exclusive_group()
    level.add_argument("--nu", type=float, help="a single level")
    level.add_argument("--nu-grid", type=_nu_grid, help="count:lo:hi (default 100:0:1)")
    p.add_argument("--method", choices=("functional", "plugin", "both"), default="both")
    p.add_argument("--order", type=_auto_or(int), default="auto")
    p.add_argument("--bandwidth", type=_auto_or(float), default="auto")
    p.add_argument("--bootstrap", type=int, default=kde.DEFAULT_BOOTSTRAP)
    p.add_argument("--grid", type=int, help="estimation grid points per axis")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison against the oracle")
    p.add_argument("--config", help="JSON experiment config (n may be a list)")
    p.add_argument("--density")
    p.add_argument("--n", type=int, action="append", help="sample size; repeatable")
    p.add_argument("--k", type=int, default=20, help="replications")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nu-grid", type=_nu_grid)
    p.add_argument("--methods", default="plugin,functional",
                   help=f"comma-separated subset of {','.join(bench.METHODS)}")
    p.add_argument("--order", type=_auto_or(int), default="auto")
    p.add_argument("--bandwidth", type=_auto_or(float), default="auto")
    p.add_argument("--bootstrap", type=int, default=kde.DEFAULT_BOOTSTRAP)
    p.add_argument("--grid", type=int)
    p.add_argument("--workers", type=int, default=1)
    common(p, default="table")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("oracle", help="exact excess-mass curve of a known density")
    p.add_argument("--density", required=True)
    p.add_argument("--nu-grid", type=_nu_grid)
    p.add_argument("--grid", type=int, help="quadrature points per axis")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("coeffs", help="cosine coefficients c_0..c_N")
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--scale", type=float, default=1.0)
    common(p, formats=("csv", "json"))
    p.set_defaults(func=cmd_coeffs)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (densities.SampleFileError, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_INPUT
    except OverflowGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
