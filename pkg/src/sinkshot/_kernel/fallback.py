"""Pure-NumPy episode loop: the reference semantics the compiled kernel mirrors.

Each step rebuilds squared-distance costs from the current centers, solves the
balanced transport problem, re-estimates centers as allocation-weighted means
(supports enter with weight 1 for their own class), and moves the centers a
fraction ``alpha`` toward the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sinkhorn import Marginals, SinkhornConfig, sinkhorn


@dataclass(frozen=True)
class KernelResult:
    plan: np.ndarray
    residuals: np.ndarray
    nonconverged: int
    log_domain_used: bool


def _squared_distances(query: np.ndarray, centers: np.ndarray) -> np.ndarray:
    q2 = (query**2).sum(axis=1)[:, None]
    c2 = (centers**2).sum(axis=1)[None, :]
    return np.maximum(q2 + c2 - 2.0 * (query @ centers.T), 0.0)


def run_map_episode(
    support: np.ndarray,
    support_labels: np.ndarray,
    query: np.ndarray,
    col_marginal: np.ndarray,
    lam: float,
    alpha: float,
    n_steps: int,
    tol: float,
    max_iters: int,
    force_log: bool = False,
) -> KernelResult:
    w = col_marginal.shape[0]
    sup_counts = np.bincount(support_labels, minlength=w).astype(np.float64)
    sup_sums = np.zeros((w, query.shape[1]))
    np.add.at(sup_sums, support_labels, support)
    centers = sup_sums / sup_counts[:, None]

    marg = Marginals(np.ones(query.shape[0]), col_marginal)
    cfg = SinkhornConfig(lam=lam, tol=tol, max_iters=max_iters, log_domain=True if force_log else None)
    residuals = np.empty(n_steps)
    nonconverged = 0
    used_log = False
    plan = None
    for step in range(n_steps):
        cost = _squared_distances(query, centers)
        result = sinkhorn(cost, marg, cfg)
        plan = result.m
        residuals[step] = result.residual
        nonconverged += not result.converged
        used_log = used_log or result.log_domain_used
        col_mass = plan.sum(axis=0)
        mu = (plan.T @ query + sup_sums) / (sup_counts + col_mass)[:, None]
        centers = centers + alpha * (mu - centers)
    return KernelResult(plan, residuals, nonconverged, used_log)
