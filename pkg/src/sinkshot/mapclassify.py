"""Transductive classification by iterative center estimation.

Centers start at the per-class support means. Each of ``n_steps`` rounds
builds squared-distance costs from queries to centers, solves a balanced
entropy-regularized transport problem for a soft allocation matrix,
re-estimates centers as allocation-weighted means (labelled samples count
with weight 1 for their own class), and moves centers a fraction ``alpha``
toward the estimate. Final labels are the row-argmax of the last allocation,
ties broken toward the lowest class id.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernel
from .episode import EpisodeView
from .errors import ValidationError
from .preprocess import PowerParams
from .sinkhorn import SinkhornConfig, TransportPlan


@dataclass(frozen=True)
class MapConfig:
    """All pipeline hyperparameters in one validated record.

    ``beta``/``epsilon`` parameterize the power transform, ``lam`` the
    transport regularization, ``alpha`` the center learning rate, ``n_steps``
    the iteration count. ``use_pt``/``use_tms`` toggle the preprocessing
    stages; ``class_prior`` (optional per-class expected query counts)
    replaces the balanced column marginal.
    """

    beta: float = 0.5
    lam: float = 10.0
    alpha: float = 0.4
    n_steps: int = 30
    epsilon: float = 1e-6
    tol: float = 1e-6
    max_iters: int = 1000
    log_domain: bool | None = None
    use_pt: bool = True
    use_tms: bool = True
    shared_mean: bool = False
    class_prior: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValidationError("alpha must be in (0, 1]")
        if self.n_steps < 1:
            raise ValidationError("n_steps must be >= 1")
        if self.class_prior is not None:
            prior = np.asarray(self.class_prior, dtype=np.float64)
            if prior.ndim != 1 or (prior <= 0).any():
                raise ValidationError("class_prior entries must be positive")
            object.__setattr__(self, "class_prior", tuple(float(x) for x in prior))
        # delegate range checks for lam/tol/max_iters and beta/epsilon
        self.sinkhorn_config()
        self.power_params()

    def sinkhorn_config(self) -> SinkhornConfig:
        return SinkhornConfig(lam=self.lam, tol=self.tol, max_iters=self.max_iters, log_domain=self.log_domain)

    def power_params(self) -> PowerParams:
        return PowerParams(beta=self.beta, epsilon=self.epsilon)


@dataclass(frozen=True)
class Prediction:
    """Per-query decisions. ``labels[i]`` is the argmax of ``probabilities[i]``
    (rows sum to 1); ``trajectory`` holds the per-step solver residuals."""

    labels: np.ndarray
    probabilities: np.ndarray
    trajectory: np.ndarray | None = None
    nonconverged_steps: int = 0
    log_domain_used: bool = False


def init_centers(support_feats: np.ndarray, support_labels: np.ndarray, w: int) -> np.ndarray:
    """Per-class arithmetic mean of the support rows; (w, d) array."""
    feats = np.asarray(support_feats, dtype=np.float64)
    labels = np.asarray(support_labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=w).astype(np.float64)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ValidationError(f"class {missing[0]} has no support samples")
    sums = np.zeros((w, feats.shape[1]))
    np.add.at(sums, labels, feats)
    return sums / counts[:, None]


def reestimate_centers(
    plan: TransportPlan | np.ndarray,
    query_feats: np.ndarray,
    support_feats: np.ndarray,
    support_labels: np.ndarray,
) -> np.ndarray:
    """Allocation-weighted class means.

    Center j is the mean of all query rows weighted by their allocated mass
    to class j plus the class-j support rows at weight 1:
    ``(plan[:,j] @ query + sum(support_j)) / (count_j + sum(plan[:,j]))``.
    """
    m = plan.m if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    query = np.asarray(query_feats, dtype=np.float64)
    support = np.asarray(support_feats, dtype=np.float64)
    labels = np.asarray(support_labels, dtype=np.int64)
    w = m.shape[1]
    if m.shape[0] != query.shape[0]:
        raise ValidationError(f"plan has {m.shape[0]} rows, expected {query.shape[0]} queries")
    counts = np.bincount(labels, minlength=w).astype(np.float64)
    sums = np.zeros((w, query.shape[1]))
    np.add.at(sums, labels, support)
    denom = counts + m.sum(axis=0)
    if (denom == 0).any():
        raise ValidationError("center with zero total weight; every class needs a support sample")
    return (m.T @ query + sums) / denom[:, None]


def update_centers(current: np.ndarray, target: np.ndarray, alpha: float) -> np.ndarray:
    """Inertial move: ``current + alpha * (target - current)``; alpha=1 jumps
    to the target."""
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must be in (0, 1]")
    return current + alpha * (np.asarray(target, dtype=np.float64) - current)


def _column_marginal(n_queries: int, w: int, prior) -> np.ndarray:
    if prior is None:
        return np.full(w, n_queries / w)
    pr = np.asarray(prior, dtype=np.float64)
    if pr.shape != (w,):
        raise ValidationError(f"class_prior has length {pr.size}, expected w={w}")
    if (pr <= 0).any():
        raise ValidationError("class_prior entries must be positive")
    return pr * (n_queries / pr.sum())


def classify_map(view: EpisodeView, cfg: MapConfig = MapConfig()) -> Prediction:
    """Run the full center-estimation loop on an (already preprocessed)
    episode view and decide labels from the final allocation matrix.

    Deterministic for fixed inputs. The column marginal is balanced
    (``n_queries / w`` per class) unless ``cfg.class_prior`` is set, in which
    case the prior is rescaled to the query count; the prior's absolute scale
    is irrelevant.
    """
    n_queries = view.query_feats.shape[0]
    col_marginal = _column_marginal(n_queries, view.w, cfg.class_prior)
    result = _kernel.run_map_episode(
        view.support_feats,
        view.support_labels,
        view.query_feats,
        col_marginal,
        cfg.lam,
        cfg.alpha,
        cfg.n_steps,
        cfg.tol,
        cfg.max_iters,
    )
    plan = result.plan
    labels = np.argmax(plan, axis=1)  # first max wins: ties go to the lowest class id
    probabilities = plan / plan.sum(axis=1, keepdims=True)
    return Prediction(
        labels=labels,
        probabilities=probabilities,
        trajectory=result.residuals,
        nonconverged_steps=result.nonconverged,
        log_domain_used=result.log_domain_used,
    )


def classify_map_imbalanced(view: EpisodeView, prior, cfg: MapConfig = MapConfig()) -> Prediction:
    """``classify_map`` with the column marginal taken from ``prior``
    (per-class expected query counts, any positive scale)."""
    pr = np.asarray(prior, dtype=np.float64)
    if pr.ndim != 1 or (pr <= 0).any():
        raise ValidationError("prior must be a 1-D vector of positive entries")
    return classify_map(view, replace(cfg, class_prior=tuple(float(x) for x in pr)))
