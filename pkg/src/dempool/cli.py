"""Command-line entry point: gen, aggregate, analyze, classify, bench."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import analysis, bench, features
from .classify import LabeledDescriptorSet, accuracy_report, predict, train_ovr_linear
from .errors import DemPoolError, InputIOError, ParseError
from .kernel import clamp_negatives, dump_kernel_csv, raw_kernel, second_order_kernel
from .pipeline import EncodeOptions, encode
from .sinkhorn import SinkhornConfig

EXIT_USAGE = 2


def _json_dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit(text, out=None):
    if out:
        features.write_atomic(out, text.encode())
    else:
        sys.stdout.write(text)


def write_descriptor(path, values, fmt, encoding="", normalized=False):
    values = np.asarray(values, dtype=np.float64).ravel()
    if fmt == "json":
        payload = _json_dump({"encoding": encoding, "normalized": normalized,
                              "values": [float(v) for v in values]}).encode()
        features.write_atomic(path, payload)
    else:
        features.save_matrix(path, values[None, :], fmt)


def read_descriptor(path, fmt):
    if fmt == "json":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        return np.asarray(obj["values"], dtype=np.float64)
    mat = features.read_matrix(path, fmt)
    if mat.shape[0] != 1:
        raise ParseError(f"{path}: descriptor files hold one row, found {mat.shape[0]}")
    return mat[0]


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    p.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    p.add_argument("--format", dest="fmt", choices=["csv", "raw-f32", "json"], default=None,
                   help="output file format")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _input(p):
    p.add_argument("--input", required=True, help="feature file")
    p.add_argument("--input-format", choices=["csv", "raw-f32"], default=None,
                   help="feature file format (default: guessed from extension)")
    p.add_argument("--drop-zero-rows", action="store_true",
                   help="discard zero-norm features instead of failing")


def _solver(p, gamma_default=0.5):
    p.add_argument("--gamma", type=float, default=None,
                   help=f"gamma-democratic exponent (default {gamma_default})")
    p.add_argument("--tau", type=float, default=0.5, help="damping exponent")
    p.add_argument("--iters", type=int, default=10, help="Sinkhorn iterations")


def build_parser():
    parser = argparse.ArgumentParser(prog="dempool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic bursty feature set")
    _common(g)
    g.add_argument("--n", type=int, default=64)
    g.add_argument("--d", type=int, default=32)
    g.add_argument("--burst-fraction", type=float, default=0.5)
    g.add_argument("--signal-fraction", type=float, default=0.25)
    g.add_argument("--noise-scale", type=float, default=0.3)
    g.add_argument("--burst-scale", type=float, default=4.0)
    g.add_argument("--class-id", type=int, default=0)

    a = sub.add_parser("aggregate", help="feature file -> descriptor file")
    _common(a)
    _input(a)
    _solver(a)
    a.add_argument("--order", type=int, choices=[1, 2], default=2)
    a.add_argument("--encoder", choices=["explicit", "sketch"], default="explicit")
    a.add_argument("--pooling", choices=["democratic", "sum", "power"], default=None,
                   help="default: power if --power is given, else democratic")
    a.add_argument("--power", type=float, default=None, help="matrix power exponent p")
    a.add_argument("--sqrt-method", choices=["eig", "newton"], default="eig")
    a.add_argument("--newton-iters", type=int, default=20)
    a.add_argument("--sketch-dim", type=int, default=8192)
    a.add_argument("--sketch-seed", type=int, default=None, help="default: --seed")
    a.add_argument("--no-postprocess", action="store_true",
                   help="skip signed square root and l2 normalization")
    a.add_argument("--kernel-dump", default=None, help="write the kernel matrix as CSV")
    a.add_argument("--report", default=None, help="write the run report here instead of stdout")

    z = sub.add_parser("analyze", help="contribution and spectrum report")
    _common(z)
    _input(z)
    _solver(z, gamma_default="unset")
    z.add_argument("--power", type=float, default=None)
    z.add_argument("--report", default=None, help="JSON report path (same as --out)")
    z.add_argument("--csv", default=None, help="per-feature contributions as CSV")

    c = sub.add_parser("classify", help="train/test one-vs-rest linear classifiers")
    _common(c)
    c.add_argument("--labels", required=True,
                   help="CSV rows: descriptor_path,label[,split]; split is train or test")
    c.add_argument("--descriptor-format", choices=["csv", "raw-f32", "json"], default=None)
    c.add_argument("--reg-c", type=float, default=1.0)

    b = sub.add_parser("bench", help="Sinkhorn vs Newton-Schulz timing")
    _common(b)
    b.add_argument("--n", type=int, default=784)
    b.add_argument("--d", type=int, default=512)
    b.add_argument("--iters", type=int, default=10)
    b.add_argument("--newton-iters", type=int, default=20)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--no-sweep", action="store_true")
    b.add_argument("--sweep-n", type=int, nargs="+", default=list(bench.SINKHORN_SWEEP_N))
    b.add_argument("--sweep-d", type=int, nargs="+", default=list(bench.NEWTON_SWEEP_D))
    return parser


def _guess_format(path, explicit):
    if explicit:
        return explicit
    return "raw-f32" if path.endswith((".f32", ".bin", ".raw")) else "csv"


def _load(args):
    fmt = _guess_format(args.input, args.input_format)
    return features.load_features(args.input, fmt, drop_zero_rows=args.drop_zero_rows)


def cmd_gen(args):
    spec = features.SyntheticSpec(
        n=args.n, d=args.d, burst_fraction=args.burst_fraction,
        signal_fraction=args.signal_fraction, noise_scale=args.noise_scale,
        seed=args.seed, class_id=args.class_id, burst_scale=args.burst_scale,
    )
    fs = features.generate_synthetic(spec)
    fmt = args.fmt or ("csv" if not args.out else _guess_format(args.out, None))
    if fmt == "json":
        raise ParseError("feature files are csv or raw-f32")
    if args.out:
        features.save_features(args.out, fs, fmt)
    else:
        sys.stdout.write(features.format_csv(fs.data))
    return 0


def cmd_aggregate(args):
    fs = _load(args)
    pooling = args.pooling or ("power" if args.power is not None else "democratic")
    opts = EncodeOptions(
        order=args.order, encoder=args.encoder, pooling=pooling,
        gamma=0.5 if args.gamma is None else args.gamma, tau=args.tau, iters=args.iters,
        power=0.5 if args.power is None else args.power, sqrt_method=args.sqrt_method,
        newton_iters=args.newton_iters, sketch_dim=args.sketch_dim,
        sketch_seed=args.seed if args.sketch_seed is None else args.sketch_seed,
        postprocess=not args.no_postprocess,
    )
    desc, info = encode(fs, opts)
    if args.kernel_dump:
        K = second_order_kernel(fs) if args.order == 2 else clamp_negatives(raw_kernel(fs))
        dump_kernel_csv(args.kernel_dump, K)
    fmt = args.fmt or (_guess_format(args.out, None) if args.out else "csv")
    if args.out:
        write_descriptor(args.out, desc.values, fmt, desc.encoding, desc.normalized)
        info["out"] = args.out
    else:
        sys.stdout.write(features.format_csv(desc.values[None, :]))
    info["pooling"] = pooling
    info["format"] = fmt
    report = _json_dump(info)
    if args.report:
        features.write_atomic(args.report, report.encode())
    else:
        (sys.stderr if not args.out else sys.stdout).write(report)
    return 0


def cmd_analyze(args):
    fs = _load(args)
    out = {"n": fs.n, "d": fs.d}
    if args.gamma is not None and args.power is not None:
        raise ValueError("give either --power or --gamma, not both")
    if args.gamma is not None:
        cfg = SinkhornConfig(tau=args.tau, iterations=args.iters, gamma=args.gamma)
        contrib = analysis.democratic_contributions(fs, cfg)
        out["mode"] = "gamma"
        out["democratic"] = contrib
        out["spectra"] = [
            analysis.spectrum_report(fs, "sum").to_dict(),
            analysis.spectrum_report(fs, "gamma", gamma=args.gamma, sinkhorn_cfg=cfg).to_dict(),
        ]
        csv_text = "index,contribution\n" + "".join(
            f"{i},{c!r}\n" for i, c in enumerate(contrib["contributions"]))
    else:
        p = 0.5 if args.power is None else args.power
        rep = analysis.contributions_vs_power(fs, p)
        out["mode"] = "power"
        out["report"] = rep.to_dict()
        out["all_bounds_hold"] = all(c.holds for c in analysis.verify_bounds(rep))
        out["spectra"] = [
            analysis.spectrum_report(fs, "sum").to_dict(),
            analysis.spectrum_report(fs, "power", p=p).to_dict(),
        ]
        csv_text = rep.to_csv(np.einsum("ij,ij->i", fs.data, fs.data))
    if args.csv:
        features.write_atomic(args.csv, csv_text.encode())
    _emit(_json_dump(out), args.report or args.out)
    return 0


def read_labels(path):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for lineno, row in enumerate(rows, 1):
        if len(row) not in (2, 3):
            raise ParseError(f"{path}:{lineno}: expected path,label[,split]")
        try:
            label = int(row[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad label {row[1]!r}") from exc
        split = row[2].strip() if len(row) == 3 else "train"
        if split not in ("train", "test"):
            raise ParseError(f"{path}:{lineno}: split must be train or test")
        entries.append((os.path.join(base, row[0].strip()), label, split))
    return entries


def cmd_classify(args):
    entries = read_labels(args.labels)
    X, y, split = [], [], []
    for p, label, s in entries:
        X.append(read_descriptor(p, _guess_format(p, args.descriptor_format)
                                 if not p.endswith(".json") else "json"))
        y.append(label)
        split.append(s)
    X = np.vstack(X)
    y = np.asarray(y)
    split = np.asarray(split)
    train = split == "train"
    test = split == "test"
    model = train_ovr_linear(LabeledDescriptorSet(X[train], y[train]), args.reg_c, seed=args.seed)
    k = model.weights.shape[0]
    out = {"num_train": int(train.sum()), "num_test": int(test.sum()), "num_classes": k,
           "train": accuracy_report(y[train], predict(model, X[train]), k)}
    if test.any():
        out["test"] = accuracy_report(y[test], predict(model, X[test]), k)
    _emit(_json_dump(out), args.out)
    return 0


def cmd_bench(args):
    report = bench.run_bench(
        n=args.n, d=args.d, iters=args.iters, newton_iters=args.newton_iters,
        repeats=args.repeats, seed=args.seed, sweep=not args.no_sweep,
        sweep_ns=tuple(args.sweep_n), sweep_ds=tuple(args.sweep_d),
        threads=args.threads or 1,
    )
    _emit(_json_dump(report), args.out)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "aggregate": cmd_aggregate,
    "analyze": cmd_analyze,
    "classify": cmd_classify,
    "bench": cmd_bench,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    limit = (threadpool_limits(limits=args.threads)
             if args.threads and args.command != "bench" else contextlib.nullcontext())
    try:
        with limit:
            return COMMANDS[args.command](args)
    except DemPoolError as exc:
        print(f"dempool: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"dempool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
