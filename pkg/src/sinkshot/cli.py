"""Command-line interface.

Subcommands: synth, concat, inspect, eval, sweep. Exit codes: 0 success,
2 invalid data/configuration, 3 malformed bank file, 4 solver/evaluation
failure, 5 i/o failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import _kernel
from .bank import FeatureBank, SynthSpec, concat_banks, open_bank, save_bank, synth_bank
from .episode import EpisodeSpec
from .errors import BankFormatError, EvaluationError, SolverError, ValidationError
from .evaluate import (
    METHODS,
    SweepSpec,
    evaluate,
    report_summary,
    sweep,
    write_report_csv,
    write_report_json,
    write_sweep_csv,
)
from .mapclassify import MapConfig
from .preprocess import PowerParams, feature_skewness, power_transform


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beta", type=float, default=0.5, help="power-transform exponent (default 0.5)")
    parser.add_argument("--epsilon", type=float, default=1e-6, help="power-transform offset (default 1e-6)")
    parser.add_argument("--lambda", dest="lam", type=float, default=10.0, help="transport regularization (default 10)")
    parser.add_argument("--alpha", type=float, default=0.4, help="center update learning rate (default 0.4)")
    parser.add_argument("--n-steps", type=int, default=30, help="center estimation iterations (default 30)")
    parser.add_argument("--tol", type=float, default=1e-6, help="solver marginal tolerance (default 1e-6)")
    parser.add_argument("--max-iters", type=int, default=1000, help="solver iteration cap (default 1000)")
    parser.add_argument("--no-pt", action="store_true", help="skip the power transform")
    parser.add_argument("--no-tms", action="store_true", help="skip per-episode mean subtraction")


def _add_episode_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--w", type=int, default=5, help="classes per episode (default 5)")
    parser.add_argument("--s", type=int, default=1, help="labelled samples per class (default 1)")
    parser.add_argument("--q", type=int, default=15, help="queries per class (default 15)")
    parser.add_argument("--q-list", type=str, default=None, help="imbalanced per-class query counts, e.g. 1,99")
    parser.add_argument("--episodes", type=int, default=1000, help="episode count (default 1000)")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (default: $SINKSHOT_WORKERS or 1)")


def _episode_spec(args) -> EpisodeSpec:
    if args.q_list:
        q = [int(x) for x in args.q_list.split(",")]
        return EpisodeSpec(w=args.w, s=args.s, q_per_class=q, seed=args.seed)
    return EpisodeSpec(w=args.w, s=args.s, q_per_class=args.q, seed=args.seed)


def _map_config(args, prior=None) -> MapConfig:
    return MapConfig(
        beta=args.beta,
        lam=args.lam,
        alpha=args.alpha,
        n_steps=args.n_steps,
        epsilon=args.epsilon,
        tol=args.tol,
        max_iters=args.max_iters,
        use_pt=not args.no_pt,
        use_tms=not args.no_tms,
        class_prior=prior,
    )


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        w_classes=args.classes,
        per_class=args.per_class,
        d=args.dim,
        center_scale=args.center_scale,
        noise_scale=args.noise_scale,
        skew_mode=args.skew_mode,
        seed=args.seed,
    )
    bank = synth_bank(spec)
    save_bank(bank, args.out)
    print(f"wrote {args.out}: n={bank.n} d={bank.d} classes={bank.num_classes} raw={bank.raw}")
    return 0


def _cmd_concat(args) -> int:
    merged = concat_banks(open_bank(args.a), open_bank(args.b))
    save_bank(merged, args.out)
    print(f"wrote {args.out}: n={merged.n} d={merged.d} classes={merged.num_classes}")
    return 0


def _cmd_inspect(args) -> int:
    bank = open_bank(args.bank)
    skew = feature_skewness(bank.features)
    info = {
        "n": bank.n,
        "d": bank.d,
        "num_classes": bank.num_classes,
        "raw": bank.raw,
        "per_class_counts": np.bincount(bank.labels, minlength=bank.num_classes).tolist(),
        "value_min": float(bank.features.min()),
        "value_max": float(bank.features.max()),
        "mean_abs_skewness": float(np.nanmean(np.abs(skew))),
    }
    if bank.raw:
        transformed = power_transform(bank.features, PowerParams(beta=args.beta, epsilon=args.epsilon))
        info["mean_abs_skewness_after_pt"] = float(np.nanmean(np.abs(feature_skewness(transformed))))
        info["pt_beta"] = args.beta
    if args.json:
        print(json.dumps(info, indent=2, sort_keys=True))
    else:
        for key, value in info.items():
            print(f"{key}: {value}")
    return 0


def _parse_prior(text: str | None, spec: EpisodeSpec):
    if text is None:
        return None
    if text == "exact":
        return tuple(float(x) for x in spec.query_counts)
    return tuple(float(x) for x in text.split(","))


def _cmd_eval(args) -> int:
    bank = open_bank(args.bank)
    spec = _episode_spec(args)
    cfg = _map_config(args, prior=_parse_prior(args.prior, spec))
    report = evaluate(bank, spec, args.method, cfg, args.episodes, args.workers)
    if args.out_csv:
        write_report_csv(report, args.out_csv)
    if args.out_json:
        write_report_json(report, args.out_json, cfg, spec)
    print(
        f"{report.method}: accuracy {100 * report.mean_accuracy:.2f}% "
        f"+/- {100 * report.ci95:.2f}% over {report.n_episodes} episodes "
        f"({1000 * report.mean_episode_seconds:.2f} ms/episode, backend {report.backend})"
    )
    return 0


def _cmd_sweep(args) -> int:
    bank = open_bank(args.bank)
    values = [float(x) for x in args.values.split(",")]
    spec = SweepSpec(
        parameter=args.param,
        values=values,
        base_cfg=_map_config(args),
        episode_spec=_episode_spec(args),
        n_episodes=args.episodes,
        method=args.method,
    )
    rows = sweep(bank, spec, args.workers)
    if args.out_csv:
        write_sweep_csv(rows, args.param, args.out_csv)
    for value, report in rows:
        print(f"{args.param}={value:g}: {100 * report.mean_accuracy:.2f}% +/- {100 * report.ci95:.2f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinkshot",
        description="Few-shot episode classification over feature banks "
        f"(active backend: {_kernel.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic feature bank")
    p.add_argument("out", help="output bank path")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=600)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--center-scale", type=float, default=1.0)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--skew-mode", choices=["gaussian", "exponential"], default="exponential")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("concat", help="concatenate two row-aligned banks feature-wise")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("out")
    p.set_defaults(fn=_cmd_concat)

    p = sub.add_parser("inspect", help="print bank statistics and skew diagnostics")
    p.add_argument("bank")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_inspect)

    p = sub.add_parser("eval", help="evaluate a method over many episodes")
    p.add_argument("bank")
    p.add_argument("--method", choices=METHODS, default="map")
    _add_episode_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--prior", type=str, default=None,
                   help="class prior for map: 'exact' or per-class counts like 30,30")
    p.add_argument("--out-csv", type=str, default=None, help="write per-episode accuracies (deterministic)")
    p.add_argument("--out-json", type=str, default=None, help="write the summary incl. timing")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep", help="evaluate along one hyperparameter axis")
    p.add_argument("bank")
    p.add_argument("--param", choices=["beta", "lambda", "alpha", "q", "n_steps"], required=True)
    p.add_argument("--values", type=str, required=True, help="comma-separated values")
    p.add_argument("--method", choices=METHODS, default="map")
    _add_episode_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--out-csv", type=str, default=None)
    p.set_defaults(fn=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BankFormatError as exc:
        print(f"error (bank format): {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"error (validation): {exc}", file=sys.stderr)
        return 2
    except (SolverError, EvaluationError) as exc:
        print(f"error (compute): {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error (i/o): {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
