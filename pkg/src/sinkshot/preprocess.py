"""Feature preprocessing: power transform, per-episode standardization, skew diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class PowerParams:
    """Power-transform hyperparameters: exponent ``beta`` and the small
    positive offset ``epsilon`` keeping inputs strictly positive."""

    beta: float = 0.5
    epsilon: float = 1e-6

    def __post_init__(self):
        if not np.isfinite(self.beta):
            raise ValidationError("beta must be finite")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")


#: Exponent grid conventionally swept when tuning the transform.
BETA_GRID = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)


def power_transform(x: np.ndarray, params: PowerParams = PowerParams()) -> np.ndarray:
    """Componentwise power (or log, for beta=0) followed by unit-L2 projection.

    Accepts a single vector or a matrix of row vectors; each row of the output
    has unit L2 norm. Inputs must be nonnegative.
    """
    arr = np.asarray(x, dtype=np.float64)
    squeeze = arr.ndim == 1
    rows = np.atleast_2d(arr)
    if (rows < 0).any():
        i, j = np.argwhere(rows < 0)[0]
        where = f"component {j}" if squeeze else f"row {i}, component {j}"
        raise ValidationError(f"power transform requires nonnegative input; negative value at {where}")
    shifted = rows + params.epsilon
    if params.beta == 0.0:
        t = np.log(shifted)
    else:
        t = shifted**params.beta
    norms = np.linalg.norm(t, axis=1)
    if (norms == 0.0).any():
        i = np.flatnonzero(norms == 0.0)[0]
        raise ValidationError(f"transformed vector at row {i} has zero norm")
    out = t / norms[:, None]
    return out[0] if squeeze else out


class TmsResult(NamedTuple):
    """Standardized support/query blocks plus the rows that centered to zero."""

    support: np.ndarray
    query: np.ndarray
    zero_support: np.ndarray
    zero_query: np.ndarray

    @property
    def zero_rows(self) -> int:
        return int(self.zero_support.size + self.zero_query.size)


def trans_mean_sub(support: np.ndarray, query: np.ndarray, shared_mean: bool = False) -> TmsResult:
    """Center each block by its own mean, then project rows to the unit sphere.

    The support block is centered on the support mean and the query block on
    the query mean (``shared_mean=True`` centers both on the pooled mean
    instead). Rows that are exactly zero after centering stay zero and are
    reported through the result rather than raising, so one degenerate
    episode cannot abort a long evaluation.
    """
    sup = np.asarray(support, dtype=np.float64)
    qry = np.asarray(query, dtype=np.float64)
    if sup.ndim != 2 or qry.ndim != 2 or sup.shape[0] < 1 or qry.shape[0] < 1:
        raise ValidationError("support and query must be nonempty 2-D matrices")
    if sup.shape[1] != qry.shape[1]:
        raise ValidationError(f"dimension mismatch: support d={sup.shape[1]}, query d={qry.shape[1]}")
    if shared_mean:
        mean = np.vstack([sup, qry]).mean(axis=0)
        sup_mean = qry_mean = mean
    else:
        sup_mean = sup.mean(axis=0)
        qry_mean = qry.mean(axis=0)

    def _project(block: np.ndarray, mean: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        centered = block - mean
        norms = np.linalg.norm(centered, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        safe = np.where(norms == 0.0, 1.0, norms)
        return centered / safe[:, None], zero

    sup_out, zero_sup = _project(sup, sup_mean)
    qry_out, zero_qry = _project(qry, qry_mean)
    return TmsResult(sup_out, qry_out, zero_sup, zero_qry)


def sample_skewness(samples: np.ndarray) -> float:
    """Standardized third central moment m3 / m2^(3/2) (biased form)."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 3:
        raise ValidationError(f"skewness needs at least 3 samples, got {x.size}")
    centered = x - x.mean()
    m2 = np.mean(centered**2)
    if m2 == 0.0:
        raise ValidationError("skewness undefined for zero-variance samples")
    m3 = np.mean(centered**3)
    return float(m3 / m2**1.5)


def feature_skewness(matrix: np.ndarray) -> np.ndarray:
    """Per-column sample skewness of a (n, d) matrix; NaN where a column has
    zero variance. Diagnostic helper for bank inspection."""
    x = np.asarray(matrix, dtype=np.float64)
    centered = x - x.mean(axis=0)
    m2 = np.mean(centered**2, axis=0)
    m3 = np.mean(centered**3, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(m2 > 0.0, m3 / m2**1.5, np.nan)
