"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/model/config format error,
3 numeric failure (training divergence).  Diagnostics go to stderr; results
go only to files under ``--out``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io, mlp, svm
from .features import extract_matrix
from .kernel import make_kernel, score_windows
from .metrics import max_tp_tn, roc
from .synth import build_dataset

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


def _config(args) -> io.RunConfig:
    return io.load_config(args.config) if getattr(args, "config", None) else io.RunConfig()


def _kernel(rc: io.RunConfig):
    return make_kernel(rc.settings.sigma(rc.synthesis), rc.synthesis.fs)


def cmd_gen(args) -> None:
    rc = _config(args)
    shielded = rc.shielded or args.shielded
    io.write_dataset(args.out, build_dataset(rc.synthesis, shielded))


def cmd_extract(args) -> None:
    rc = _config(args)
    ds = io.read_dataset(args.inp, rc.synthesis.fs)
    k = _kernel(rc)
    for name, split in ds:
        values, _ = extract_matrix(split.samples, k)
        io.write_features(io.split_path(args.out, name), values, split.labels)


def cmd_train(args) -> None:
    rc = _config(args)
    tr = io.read_features(io.split_path(args.features, "train"))
    ev = io.read_features(io.split_path(args.features, "eval"))
    if args.method == "svm":
        _, model = svm.grid_search_fit(tr, ev, rc.settings.grid())
    else:
        model = mlp.train(tr, ev, rc.train_config())
    io.save_model(args.out, model)


def _scores(args, rc: io.RunConfig) -> tuple[np.ndarray, np.ndarray]:
    """Method scores and labels for ``--in`` windows or ``--features`` rows."""
    if args.method == "kernel":
        if args.inp is None:
            raise UsageError("the kernel method needs --in windows")
        split = io.read_windows(args.inp, rc.synthesis.fs)
        return score_windows(split.samples, _kernel(rc)), split.labels
    if args.model is None:
        raise UsageError(f"--model is required for --method {args.method}")
    model = io.load_model(args.model, expect=args.method)
    if getattr(args, "features", None):
        values, labels = io.read_features(args.features)
    elif args.inp is not None:
        split = io.read_windows(args.inp, rc.synthesis.fs)
        values, labels = extract_matrix(split.samples, _kernel(rc))[0], split.labels
    else:
        raise UsageError("give --in windows or --features rows")
    if args.method == "svm":
        return svm.decision_values(model, values), labels
    return mlp.scores(model, values), labels


def cmd_detect(args) -> None:
    rc = _config(args)
    if args.method == "kernel":
        if args.theta is None:
            raise UsageError("--theta is required for --method kernel")
        if args.theta < 0:
            raise UsageError("--theta must be nonnegative")
        threshold = args.theta
    else:
        threshold = 0.0 if args.method == "svm" else 0.5
    s, labels = _scores(args, rc)
    decisions = (s >= threshold).astype(int)
    lines = ["index,score,decision,label"]
    lines += [f"{i},{io.fmt(v)},{d},{lab}" for i, (v, d, lab) in enumerate(zip(s, decisions, labels))]
    io.atomic_write_text(args.out, "\n".join(lines) + "\n")


def cmd_eval(args) -> None:
    rc = _config(args)
    if args.method is None:
        rep = ex.experiment_roc_comparison(rc.synthesis, settings=rc.settings)
        io.write_report(args.out, rep, metric="auc")
        return
    s, labels = _scores(args, rc)
    curve = roc(s, labels)
    acc, thr = max_tp_tn(s, labels)
    io.atomic_write_text(f"{args.out}.roc.csv", io.curves_csv({args.method: curve}))
    io.atomic_write_text(f"{args.out}.roc.svg", io.roc_svg({args.method: curve}, f"ROC ({args.method})"))
    io.atomic_write_text(
        f"{args.out}.metrics.csv",
        f"method,n,auc,accuracy,threshold\n{args.method},{labels.size},{io.fmt(curve.auc)},{io.fmt(acc)},{io.fmt(thr)}\n",
    )


def cmd_sweep(args) -> None:
    rc = _config(args)
    if args.kind == "snr":
        rep = ex.experiment_snr_sweep(rc.synthesis, settings=rc.settings)
    elif args.kind == "fraction":
        rep = ex.experiment_fraction_sweep(rc.synthesis, settings=rc.settings)
    else:
        rep = ex.experiment_feature_subsets(rc.synthesis, args.mode, settings=rc.settings)
    io.write_report(args.out, rep)


def cmd_rank(args) -> None:
    rc = _config(args)
    order = ex.rank_features(rc.synthesis, settings=rc.settings)
    lines = ["rank,feature,median_accuracy"]
    lines += [f"{i},f{j},{io.fmt(acc)}" for i, (j, acc) in enumerate(order, start=1)]
    io.atomic_write_text(args.out, "\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bkjump", description="dc-jump detection in magnetometer windows")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic train/eval/test dataset")
    g.add_argument("--config")
    g.add_argument("--out", required=True, help="path prefix for <out>.{train,eval,test}.csv")
    g.add_argument("--shielded", action="store_true", help="sensor noise only, no clutter")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("extract", help="window CSVs -> feature CSVs")
    e.add_argument("--in", dest="inp", required=True, help="dataset prefix")
    e.add_argument("--out", required=True, help="feature prefix")
    e.add_argument("--config")
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", help="train an SVM or MLP on feature CSVs")
    t.add_argument("--method", choices=("svm", "mlp"), required=True)
    t.add_argument("--features", required=True, help="feature prefix")
    t.add_argument("--out", required=True, help="model file")
    t.add_argument("--config")
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("detect", help="per-window decisions")
    d.add_argument("--method", choices=("kernel", "svm", "mlp"), required=True)
    d.add_argument("--model")
    d.add_argument("--in", dest="inp", help="window CSV")
    d.add_argument("--features", help="feature CSV (svm/mlp only)")
    d.add_argument("--theta", type=float, help="kernel score threshold")
    d.add_argument("--out", required=True)
    d.add_argument("--config")
    d.set_defaults(func=cmd_detect)

    v = sub.add_parser("eval", help="ROC and max(TP+TN) for one method, or the full ROC comparison")
    v.add_argument("--method", choices=("kernel", "svm", "mlp"))
    v.add_argument("--model")
    v.add_argument("--in", dest="inp", help="window CSV")
    v.add_argument("--features", help="feature CSV (svm/mlp only)")
    v.add_argument("--out", required=True, help="output prefix")
    v.add_argument("--config")
    v.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="SNR, training-fraction or feature-subset sweep")
    s.add_argument("--kind", choices=("snr", "fraction", "features"), required=True)
    s.add_argument("--mode", choices=("prefix", "exhaustive"), help="feature-subset mode")
    s.add_argument("--out", required=True, help="output prefix")
    s.add_argument("--config")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("rank", help="rank features by single-feature MLP accuracy")
    r.add_argument("--out", required=True)
    r.add_argument("--config")
    r.set_defaults(func=cmd_rank)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (io.FormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (mlp.TrainingDivergedError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
