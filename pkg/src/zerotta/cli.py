"""Command-line front end.

Subcommands:
    predict          single sample (views + text ZTEB) -> prediction
    evaluate         manifest -> accuracy report
    calibrate        confidence/correctness CSV -> calibration report (+ bin CSV)
    ensemble-theory  majority-error sweep over (epsilon, N) -> table
    mem-sweep        one-step invariance sweep -> per-trial table
    risk-check       manifest -> averaged-prediction risk-bound statistics
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import calibration_report, reliability_bins
from .ensemble import EnsembleParams, majority_error, monte_carlo_majority_error, risk_bound_check
from .evaluate import Method, evaluate_dataset
from .manifest import ManifestError, load_manifest
from .memlab import InvarianceRecord, MemConfig, ToyDims, invariance_sweep
from .zero import TieBreak, ZeroConfig, zero_predict
from .zteb import ZtebFormatError, read_block, read_embedding_file

DEFAULT_GAMMA = 0.3
DEFAULT_TAU = 0.01


def _percentile(value: str) -> float:
    x = float(value)
    if not 0.0 < x <= 1.0:
        raise argparse.ArgumentTypeError(f"percentile must be in (0, 1], got {value}")
    return x


def _positive(value: str) -> float:
    x = float(value)
    if not x > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return x


def _unit_interval(value: str) -> float:
    x = float(value)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return x


def _add_zero_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=_percentile, default=DEFAULT_GAMMA,
                   help="confidence-filter percentile in (0, 1] (default 0.3)")
    p.add_argument("--tau", type=_positive, default=None,
                   help="softmax temperature for filtering "
                        "(default 0.01, or the manifest value when evaluating)")
    p.add_argument("--tie-break", default=TieBreak.GREEDY.value,
                   choices=[t.value for t in TieBreak],
                   help="vote tie-break strategy (default greedy)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--limit-mode", default="analytic", choices=["analytic", "eps"],
                   help="zero-temperature path: analytic limit or eps softmax")


def _add_format_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", default="json", choices=["json", "csv"],
                   help="output format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zerotta",
        description="Test-time adaptation by zero-temperature voting over "
                    "confident augmented views, plus its supporting analytics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="predict a single sample from ZTEB files")
    p.add_argument("--views", required=True, help="(N, D) ZTEB file of view embeddings")
    p.add_argument("--text", required=True, help="(C, D) ZTEB file of class embeddings")
    _add_zero_flags(p)
    _add_format_flag(p)
    p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("evaluate", help="evaluate a manifest")
    p.add_argument("manifest", help="manifest JSON path")
    p.add_argument("--methods", default="zero-shot,zero",
                   help="comma-separated subset of: zero-shot, zero, zero-ensemble")
    _add_zero_flags(p)
    _add_format_flag(p)
    p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("calibrate", help="confidence/correctness CSV -> calibration report")
    p.add_argument("input", help="CSV with confidence,correct columns")
    p.add_argument("--bins", type=int, default=20, help="number of reliability bins (default 20)")
    _add_format_flag(p)
    p.add_argument("--out", default="-", help="report path (default stdout)")
    p.add_argument("--bin-csv", default=None, help="optional path for the per-bin CSV")

    p = sub.add_parser("ensemble-theory", help="majority-error sweep over (epsilon, N)")
    p.add_argument("--epsilon", type=_unit_interval, nargs="+", required=True,
                   help="one or more per-voter error rates")
    p.add_argument("--n", type=int, nargs="+", required=True,
                   help="one or more committee sizes")
    p.add_argument("--monte-carlo", type=int, default=0, metavar="TRIALS",
                   help="append a simulated estimate with this many trials")
    p.add_argument("--seed", type=int, default=0)
    _add_format_flag(p)
    p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("mem-sweep", help="one-step entropy-minimization invariance sweep")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--lambda", dest="learning_rate", type=float, default=0.01,
                   help="gradient-descent step size (default 0.01)")
    p.add_argument("--gamma", type=_percentile, default=1.0)
    p.add_argument("--tau", type=_positive, default=1.0)
    p.add_argument("--bins", type=int, default=10, help="entropy buckets (default 10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-views", type=int, default=8)
    p.add_argument("--n-classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--ctx-dim", type=int, default=2)
    p.add_argument("--ctx-len", type=int, default=2)
    p.add_argument("--token-dim", type=int, default=3)
    _add_format_flag(p)
    p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("risk-check", help="averaged-prediction risk bound over a manifest")
    p.add_argument("manifest", help="manifest JSON path")
    p.add_argument("--tau", type=_positive, default=None,
                   help="softmax temperature (default: manifest value)")
    _add_format_flag(p)
    p.add_argument("--out", default="-", help="output path (default stdout)")

    return parser


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _rows_to_csv(fieldnames, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _cmd_predict(args) -> int:
    views = read_embedding_file(args.views)
    text = read_embedding_file(args.text)
    cfg = ZeroConfig(tau=args.tau if args.tau is not None else DEFAULT_TAU,
                     gamma=args.gamma, tie_break=TieBreak.from_name(args.tie_break),
                     seed=args.seed, limit_mode=args.limit_mode)
    res = zero_predict(views, text, cfg)
    payload = {
        "predicted_class": res.predicted_class,
        "vote_counts": res.vote_counts.tolist(),
        "tie_occurred": res.tie_occurred,
        "tie_breaker_used": res.tie_breaker_used,
        "views_kept": res.filter_mask.order.tolist(),
        "marginal": res.marginal.tolist(),
    }
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        rows = [{"class": c, "votes": int(v), "marginal": m}
                for c, (v, m) in enumerate(zip(res.vote_counts, res.marginal))]
        _emit(_rows_to_csv(["class", "votes", "marginal"], rows), args.out)
    return 0


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    cfg = ZeroConfig(gamma=args.gamma, tie_break=TieBreak.from_name(args.tie_break),
                     seed=args.seed, limit_mode=args.limit_mode)
    report = evaluate_dataset(manifest, methods, cfg, tau_override=args.tau)
    if args.format == "json":
        _emit(report.to_json(), args.out)
    else:
        fieldnames = ["sample_id", "label"] + report.config["methods"]
        _emit(_rows_to_csv(fieldnames, report.samples), args.out)
    return 0


def _read_calibration_csv(path):
    confidences, correct = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                conf = float(row[0])
            except ValueError:
                continue  # header line
            confidences.append(conf)
            correct.append(str(row[1]).strip().lower() in ("1", "true", "t", "yes"))
    if not confidences:
        raise ValueError(f"{path}: no (confidence, correct) rows found")
    return np.array(confidences), np.array(correct, dtype=bool)


def _cmd_calibrate(args) -> int:
    confidences, correct = _read_calibration_csv(args.input)
    report = calibration_report(confidences, correct, m_bins=args.bins)
    bins = reliability_bins(confidences, correct, m_bins=args.bins)
    payload = {
        "ece_unweighted": report.ece_unweighted,
        "ece_weighted": report.ece_weighted,
        "overconfident_bin_fraction": report.overconfident_bin_fraction,
        "top1_accuracy": report.top1_accuracy,
        "m_bins": args.bins,
        "n_samples": int(bins.counts.sum()),
    }
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(_rows_to_csv(list(payload), [payload]), args.out)
    if args.bin_csv:
        rows = [
            {
                "bin": i,
                "lower": bins.edges[i],
                "upper": bins.edges[i + 1],
                "count": int(bins.counts[i]),
                "accuracy": "" if bins.counts[i] == 0 else bins.accuracy[i],
                "confidence": "" if bins.counts[i] == 0 else bins.confidence[i],
            }
            for i in range(bins.m_bins)
        ]
        _emit(_rows_to_csv(["bin", "lower", "upper", "count", "accuracy", "confidence"], rows),
              args.bin_csv)
    return 0


def _cmd_ensemble_theory(args) -> int:
    rows = []
    for eps in args.epsilon:
        for n in args.n:
            params = EnsembleParams(n_voters=n, epsilon=eps)
            row = {"epsilon": eps, "n_voters": n, "majority_error": majority_error(params)}
            if args.monte_carlo > 0:
                mc = monte_carlo_majority_error(params, args.monte_carlo, seed=args.seed)
                row["mc_estimate"] = mc.estimate
                row["mc_std_error"] = mc.std_error
                row["mc_half_split_rate"] = mc.half_split_rate
            rows.append(row)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(_rows_to_csv(list(rows[0]), rows), args.out)
    return 0


def _record_row(trial: int, rec: InvarianceRecord) -> dict:
    return {
        "trial": trial,
        "entropy_pre": rec.entropy_pre,
        "entropy_post": rec.entropy_post,
        "argmax_pre": rec.argmax_pre,
        "argmax_post": rec.argmax_post,
        "condition_lhs": rec.condition_lhs,
        "condition_rhs": rec.condition_rhs,
        "condition_holds": int(rec.condition_holds),
        "invariant": int(rec.invariant),
    }


def _cmd_mem_sweep(args) -> int:
    dims = ToyDims(n_views=args.n_views, n_classes=args.n_classes, embed_dim=args.dim,
                   ctx_dim=args.ctx_dim, ctx_len=args.ctx_len, token_dim=args.token_dim)
    cfg = MemConfig(learning_rate=args.learning_rate, tau=args.tau, gamma=args.gamma)
    sweep = invariance_sweep(args.trials, dims, cfg, n_entropy_bins=args.bins, seed=args.seed)
    rows = [_record_row(t, rec) for t, rec in enumerate(sweep.records)]
    if args.format == "json":
        _emit(json.dumps(rows, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(_rows_to_csv(list(rows[0]), rows), args.out)
    ratios = ", ".join(f"{r:.3f}" for r in sweep.bin_ratios)
    print(f"invariance ratio {sweep.invariance_ratio:.4f}; "
          f"per-entropy-bin (most to least uncertain): {ratios}", file=sys.stderr)
    return 0


def _cmd_risk_check(args) -> int:
    from .core import softmax_temperature

    manifest = load_manifest(args.manifest)
    tau = args.tau if args.tau is not None else manifest.temperature
    template = read_embedding_file(manifest.resolve(manifest.text_embeddings[0]))
    stats = {loss: {"holds": 0, "lhs_sum": 0.0, "rhs_sum": 0.0} for loss in ("l1", "l2")}
    for record in manifest.samples:
        block = read_block(manifest.resolve(record.path), record.offset,
                           manifest.n_views, template.shape[1])
        probs = softmax_temperature(block @ template.T, tau)
        for loss in ("l1", "l2"):
            check = risk_bound_check(record.label, probs, loss)
            stats[loss]["holds"] += int(check.holds)
            stats[loss]["lhs_sum"] += check.lhs
            stats[loss]["rhs_sum"] += check.rhs
    total = len(manifest.samples)
    payload = {
        loss: {
            "holds_fraction": s["holds"] / total,
            "mean_lhs": s["lhs_sum"] / total,
            "mean_rhs": s["rhs_sum"] / total,
        }
        for loss, s in stats.items()
    }
    payload["n_samples"] = total
    if args.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        rows = [{"loss": loss, **payload[loss]} for loss in ("l1", "l2")]
        _emit(_rows_to_csv(["loss", "holds_fraction", "mean_lhs", "mean_rhs"], rows), args.out)
    return 0


_COMMANDS = {
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "calibrate": _cmd_calibrate,
    "ensemble-theory": _cmd_ensemble_theory,
    "mem-sweep": _cmd_mem_sweep,
    "risk-check": _cmd_risk_check,
}


def cli_main(argv=None) -> int:
    """Parse arguments and dispatch; returns a process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints usage/diagnostics itself
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, ZtebFormatError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main())
