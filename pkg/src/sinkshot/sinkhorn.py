"""Entropy-regularized optimal transport via alternating row/column scaling.

The solver minimizes ``sum(M * cost) - (1/lam) * H(M)`` over nonnegative
matrices whose rows sum to ``p`` and columns sum to ``q``, where
``H(M) = -sum(M * log M)``. The optimum factorizes as
``diag(u) @ exp(-lam * cost) @ diag(v)``; larger ``lam`` sharpens the plan
toward the unregularized optimum, smaller ``lam`` flattens rows toward
uniform.

Two numerical domains are available: plain scaling on ``exp(-lam * cost)``
(fast, default) and log-domain updates on the potentials (immune to
under/overflow). ``log_domain=None`` tries the linear domain first and falls
back automatically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver knobs: regularization ``lam``, marginal tolerance, iteration cap,
    and the numerical-domain selector (None = auto)."""

    lam: float = 10.0
    tol: float = 1e-6
    max_iters: int = 1000
    log_domain: bool | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("lam must be positive")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")


@dataclass(frozen=True)
class Marginals:
    """Prescribed row sums ``p`` and column sums ``q`` of the transport plan."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        if p.ndim != 1 or q.ndim != 1:
            raise ValidationError("marginals must be 1-D vectors")
        if (p <= 0).any() or (q <= 0).any():
            raise ValidationError("marginal entries must be strictly positive")
        if abs(p.sum() - q.sum()) > 1e-9:
            raise ValidationError(f"marginal sums differ: {p.sum()} vs {q.sum()}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @staticmethod
    def balanced(n_rows: int, n_cols: int) -> "Marginals":
        """Unit row mass, equal class shares: p = 1, q = (n_rows/n_cols) * 1."""
        return Marginals(np.ones(n_rows), np.full(n_cols, n_rows / n_cols))

    @staticmethod
    def from_prior(n_rows: int, prior: np.ndarray) -> "Marginals":
        """Unit row mass with column shares proportional to ``prior``,
        rescaled to total ``n_rows``; invariant to the prior's scale."""
        pr = np.asarray(prior, dtype=np.float64)
        if pr.ndim != 1 or (pr <= 0).any():
            raise ValidationError("prior must be a 1-D vector of positive entries")
        return Marginals(np.ones(n_rows), pr * (n_rows / pr.sum()))


@dataclass(frozen=True)
class TransportPlan:
    """Soft allocation matrix with its scaling factors and solve diagnostics.

    ``m`` reconstructs as ``diag(u) @ exp(-lam * cost) @ diag(v)`` with
    ``u = exp(log_u)``, ``v = exp(log_v)``. ``residual`` is the max marginal
    violation at exit; ``converged`` says it met the tolerance within the
    iteration cap.
    """

    m: np.ndarray
    log_u: np.ndarray
    log_v: np.ndarray
    converged: bool
    iterations: int
    residual: float
    log_domain_used: bool = False

    @property
    def u(self) -> np.ndarray:
        return np.exp(self.log_u)

    @property
    def v(self) -> np.ndarray:
        return np.exp(self.log_v)


def _residual(m: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    row = np.abs(m.sum(axis=1) - p).max()
    col = np.abs(m.sum(axis=0) - q).max()
    return float(max(row, col))


def _solve_linear(cost, p, q, cfg) -> TransportPlan:
    # Shift each row so its minimum maps to exp(0); the shift folds into u.
    row_min = cost.min(axis=1)
    kernel = np.exp(-cfg.lam * (cost - row_min[:, None]))
    v = np.ones_like(q)
    u = np.ones_like(p)
    converged = False
    residual = np.inf
    iterations = 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for iterations in range(1, cfg.max_iters + 1):
            u = p / (kernel @ v)
            v = q / (kernel.T @ u)
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                raise SolverError("non-finite scaling factors in linear domain")
            m = u[:, None] * kernel * v[None, :]
            residual = _residual(m, p, q)
            if residual <= cfg.tol:
                converged = True
                break
    with np.errstate(divide="ignore"):
        log_u = np.log(u) + cfg.lam * row_min
        log_v = np.log(v)
    return TransportPlan(m, log_u, log_v, converged, iterations, residual, log_domain_used=False)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    shift = a.max(axis=axis, keepdims=True)
    return np.squeeze(shift, axis=axis) + np.log(np.exp(a - shift).sum(axis=axis))


def _solve_log(cost, p, q, cfg) -> TransportPlan:
    neg = -cfg.lam * cost
    log_p = np.log(p)
    log_q = np.log(q)
    f = np.zeros_like(p)
    g = np.zeros_like(q)
    converged = False
    residual = np.inf
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        f = log_p - _logsumexp(neg + g[None, :], axis=1)
        g = log_q - _logsumexp(neg + f[:, None], axis=0)
        m = np.exp(f[:, None] + neg + g[None, :])
        residual = _residual(m, p, q)
        if residual <= cfg.tol:
            converged = True
            break
    return TransportPlan(m, f, g, converged, iterations, residual, log_domain_used=True)


def sinkhorn(cost: np.ndarray, marginals: Marginals, cfg: SinkhornConfig = SinkhornConfig()) -> TransportPlan:
    """Solve the regularized transport problem on ``cost`` for ``marginals``.

    Alternates row scalings (matching ``p``) and column scalings (matching
    ``q``) until the max marginal violation drops to ``cfg.tol`` or the
    iteration cap is hit; ``converged`` records which. Raises
    :class:`SolverError` only when the requested domain blows up and no
    fallback is allowed.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValidationError("cost must be a 2-D matrix")
    if not np.isfinite(c).all():
        raise ValidationError("cost entries must be finite")
    if (c < 0).any():
        raise ValidationError("cost entries must be nonnegative")
    if c.shape != (marginals.p.size, marginals.q.size):
        raise ValidationError(f"cost shape {c.shape} does not match marginals ({marginals.p.size}, {marginals.q.size})")
    if cfg.log_domain is True:
        return _solve_log(c, marginals.p, marginals.q, cfg)
    if cfg.log_domain is False:
        return _solve_linear(c, marginals.p, marginals.q, cfg)
    try:
        return _solve_linear(c, marginals.p, marginals.q, cfg)
    except SolverError:
        return _solve_log(c, marginals.p, marginals.q, cfg)


def plan_entropy(plan: TransportPlan | np.ndarray) -> float:
    """Entropy H(M) = -sum(M * log M) with the 0*log(0) = 0 convention."""
    m = plan.m if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    if (m < 0).any():
        raise ValidationError("plan entries must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(m > 0, m * np.log(m), 0.0)
    return float(-terms.sum())


def plan_objective(plan: TransportPlan | np.ndarray, cost: np.ndarray, lam: float) -> float:
    """Regularized transport objective ``sum(M*cost) - H(M)/lam``."""
    m = plan.m if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    return float((m * cost).sum() - plan_entropy(m) / lam)
