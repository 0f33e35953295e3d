"""Many-episode evaluation with confidence intervals, sweeps, and reports.

Per-episode seeds derive from the master seed (``EpisodeSpec.seed``) by index,
and aggregation is order-independent, so a report is identical for any worker
count. The CSV outputs contain only deterministic fields; wall-clock timings
live in the JSON summary.

Preprocessing follows the method's setting: the power transform applies to
every method, while the per-episode mean subtraction uses query statistics
and therefore applies only to the transductive methods (kmeans, map), never
to the inductive ncm.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _kernel
from .bank import FeatureBank
from .baselines import classify_kmeans, classify_ncm
from .episode import Episode, EpisodeSpec, EpisodeView, episode_accuracy, sample_episode
from .errors import EvaluationError, ValidationError
from .mapclassify import MapConfig, Prediction, classify_map
from .preprocess import power_transform, trans_mean_sub
from .rng import derive_seed

WORKERS_ENV = "SINKSHOT_WORKERS"
METHODS = ("ncm", "kmeans", "map")

MethodFn = Callable[[EpisodeView, MapConfig], Prediction]


@dataclass
class EvalDiagnostics:
    """Counters accumulated across episodes."""

    sinkhorn_nonconverged: int = 0
    zero_center_rows: int = 0
    log_domain_episodes: int = 0

    def merge(self, other: "EvalDiagnostics") -> None:
        self.sinkhorn_nonconverged += other.sinkhorn_nonconverged
        self.zero_center_rows += other.zero_center_rows
        self.log_domain_episodes += other.log_domain_episodes


@dataclass(frozen=True)
class EvalReport:
    """Aggregate of one evaluation run.

    ``ci95`` is ``1.96 * stdev(per_episode, ddof=1) / sqrt(n_episodes)``
    (normal approximation). ``mean_episode_seconds`` is measured wall clock
    and is the one non-deterministic field.
    """

    method: str
    n_episodes: int
    mean_accuracy: float
    ci95: float
    per_episode: np.ndarray
    mean_episode_seconds: float
    diagnostics: EvalDiagnostics = field(default_factory=EvalDiagnostics)
    master_seed: int = 0
    backend: str = _kernel.BACKEND


def preprocess_view(episode: Episode, cfg: MapConfig, transductive: bool) -> tuple[EpisodeView, int]:
    """Apply the configured preprocessing and return the label-blind view
    plus the count of rows that centered to zero."""
    support = episode.support_feats
    query = episode.query_feats
    if cfg.use_pt:
        params = cfg.power_params()
        support = power_transform(support, params)
        query = power_transform(query, params)
    zero_rows = 0
    if cfg.use_tms and transductive:
        tms = trans_mean_sub(support, query, shared_mean=cfg.shared_mean)
        support, query = tms.support, tms.query
        zero_rows = tms.zero_rows
    return EpisodeView(support, episode.support_labels, query, episode.w), zero_rows


def _resolve_method(method: str | MethodFn) -> tuple[str, MethodFn, bool]:
    """Returns (name, callable, transductive)."""
    if callable(method):
        name = getattr(method, "__name__", "custom")
        return name, method, True
    if method == "ncm":
        return "ncm", lambda view, cfg: classify_ncm(view), False
    if method == "kmeans":
        return "kmeans", lambda view, cfg: classify_kmeans(view, n_steps=cfg.n_steps), True
    if method == "map":
        return "map", classify_map, True
    raise ValidationError(f"unknown method {method!r}; expected one of {METHODS} or a callable")


def run_one_episode(
    bank: FeatureBank,
    spec: EpisodeSpec,
    method: str | MethodFn,
    cfg: MapConfig,
    index: int,
) -> tuple[float, float, EvalDiagnostics]:
    """Sample, preprocess, and classify episode ``index``; returns
    (accuracy, seconds, diagnostics)."""
    name, fn, transductive = _resolve_method(method)
    seed = derive_seed(spec.seed, index)
    episode = sample_episode(bank, replace(spec, seed=seed))
    start = time.perf_counter()
    view, zero_rows = preprocess_view(episode, cfg, transductive)
    pred = fn(view, cfg)
    elapsed = time.perf_counter() - start
    acc = episode_accuracy(pred, episode)
    diag = EvalDiagnostics(
        sinkhorn_nonconverged=getattr(pred, "nonconverged_steps", 0),
        zero_center_rows=zero_rows,
        log_domain_episodes=int(getattr(pred, "log_domain_used", False)),
    )
    return acc, elapsed, diag


def _run_chunk(args) -> list[tuple[int, float, float, EvalDiagnostics]]:
    bank, spec, method, cfg, indices = args
    out = []
    for index in indices:
        try:
            acc, elapsed, diag = run_one_episode(bank, spec, method, cfg, index)
        except Exception as exc:
            raise EvaluationError(f"episode {index}: {exc}") from exc
        out.append((index, acc, elapsed, diag))
    return out


def resolve_workers(n_workers: int | None) -> int:
    if n_workers is not None:
        return max(1, int(n_workers))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def evaluate(
    bank: FeatureBank,
    spec: EpisodeSpec,
    method: str | MethodFn,
    cfg: MapConfig = MapConfig(),
    n_episodes: int = 1000,
    n_workers: int | None = None,
) -> EvalReport:
    """Run ``n_episodes`` seeded episodes and aggregate accuracy.

    ``spec.seed`` acts as the master seed. Results are identical for any
    worker count; custom callable methods run single-process because they may
    not pickle.
    """
    if n_episodes < 1:
        raise ValidationError("n_episodes must be >= 1")
    name, _, _ = _resolve_method(method)
    workers = resolve_workers(n_workers)
    indices = list(range(n_episodes))
    if workers == 1 or callable(method) or n_episodes < 2 * workers:
        results = _run_chunk((bank, spec, method, cfg, indices))
    else:
        chunks = [(bank, spec, method, cfg, list(part)) for part in np.array_split(indices, workers)]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, chunks):
                results.extend(part)
    results.sort(key=lambda r: r[0])
    accs = np.array([r[1] for r in results])
    times = np.array([r[2] for r in results])
    diagnostics = EvalDiagnostics()
    for r in results:
        diagnostics.merge(r[3])
    mean = float(accs.mean())
    ci95 = float(1.96 * accs.std(ddof=1) / np.sqrt(n_episodes)) if n_episodes > 1 else 0.0
    return EvalReport(
        method=name,
        n_episodes=n_episodes,
        mean_accuracy=mean,
        ci95=ci95,
        per_episode=accs,
        mean_episode_seconds=float(times.mean()),
        diagnostics=diagnostics,
        master_seed=spec.seed,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: evaluate ``base_cfg`` at each value of
    ``parameter`` (one of beta, lambda, alpha, q, n_steps), sharing the master
    seed across points so curves are comparable."""

    parameter: str
    values: Sequence[float]
    base_cfg: MapConfig
    episode_spec: EpisodeSpec
    n_episodes: int = 1000
    method: str = "map"

    _PARAMS = ("beta", "lambda", "alpha", "q", "n_steps")

    def __post_init__(self):
        if self.parameter not in self._PARAMS:
            raise ValidationError(f"unknown sweep parameter {self.parameter!r}; expected one of {self._PARAMS}")
        if len(self.values) == 0:
            raise ValidationError("sweep needs at least one value")


def _apply_sweep_value(spec: SweepSpec, value: float) -> tuple[MapConfig, EpisodeSpec]:
    cfg, ep = spec.base_cfg, spec.episode_spec
    if spec.parameter == "beta":
        return replace(cfg, beta=float(value)), ep
    if spec.parameter == "lambda":
        return replace(cfg, lam=float(value)), ep
    if spec.parameter == "alpha":
        return replace(cfg, alpha=float(value)), ep
    if spec.parameter == "n_steps":
        return replace(cfg, n_steps=int(value)), ep
    return cfg, replace(ep, q_per_class=int(value))


def sweep(bank: FeatureBank, spec: SweepSpec, n_workers: int | None = None) -> list[tuple[float, EvalReport]]:
    """Evaluate once per parameter value; returns (value, report) pairs in
    input order."""
    out = []
    for value in spec.values:
        cfg, ep = _apply_sweep_value(spec, value)
        out.append((float(value), evaluate(bank, ep, spec.method, cfg, spec.n_episodes, n_workers)))
    return out


def write_report_csv(report: EvalReport, path) -> None:
    """Per-episode CSV: deterministic for a fixed master seed and bank."""
    lines = ["episode,seed,accuracy"]
    for i, acc in enumerate(report.per_episode):
        lines.append(f"{i},{derive_seed(report.master_seed, i)},{acc!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def report_summary(report: EvalReport, cfg: MapConfig | None = None, spec: EpisodeSpec | None = None) -> dict:
    summary = {
        "method": report.method,
        "n_episodes": report.n_episodes,
        "mean_accuracy": report.mean_accuracy,
        "ci95": report.ci95,
        "master_seed": report.master_seed,
        "backend": report.backend,
        "mean_episode_seconds": report.mean_episode_seconds,
        "diagnostics": {
            "sinkhorn_nonconverged": report.diagnostics.sinkhorn_nonconverged,
            "zero_center_rows": report.diagnostics.zero_center_rows,
            "log_domain_episodes": report.diagnostics.log_domain_episodes,
        },
    }
    if cfg is not None:
        summary["config"] = {
            "beta": cfg.beta, "lambda": cfg.lam, "alpha": cfg.alpha, "n_steps": cfg.n_steps,
            "epsilon": cfg.epsilon, "tol": cfg.tol, "max_iters": cfg.max_iters,
            "use_pt": cfg.use_pt, "use_tms": cfg.use_tms,
            "class_prior": list(cfg.class_prior) if cfg.class_prior else None,
        }
    if spec is not None:
        summary["episodes"] = {"w": spec.w, "s": spec.s, "q_per_class": np.asarray(spec.query_counts).tolist()}
    return summary


def write_report_json(report: EvalReport, path, cfg: MapConfig | None = None, spec: EpisodeSpec | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(report_summary(report, cfg, spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sweep_csv(rows: list[tuple[float, EvalReport]], parameter: str, path) -> None:
    lines = ["parameter,value,n_episodes,mean_accuracy,ci95"]
    for value, report in rows:
        lines.append(f"{parameter},{value!r},{report.n_episodes},{report.mean_accuracy!r},{report.ci95!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
