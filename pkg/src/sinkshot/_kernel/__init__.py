"""Episode-loop backend selection.

The compiled Cython kernel is preferred when built; otherwise the NumPy
fallback runs. Set SINKSHOT_FORCE_FALLBACK=1 before import to skip the
compiled kernel regardless. The two backends agree to floating-point
tolerance but are not guaranteed bit-identical to each other.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback
from .fallback import KernelResult

_mapkernel = None
if os.environ.get("SINKSHOT_FORCE_FALLBACK") != "1":
    try:
        from . import _mapkernel  # type: ignore[no-redef]
    except ImportError:
        _mapkernel = None

HAVE_COMPILED = _mapkernel is not None
BACKEND = "compiled" if HAVE_COMPILED else "python"


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
) -> KernelResult:
    """Run one episode loop on the active backend.

    If the compiled linear-domain kernel blows up numerically, the whole
    episode is re-run through the log-domain fallback.
    """
    if HAVE_COMPILED:
        plan, residuals, nonconverged, status = _mapkernel.run_map_episode(
            np.ascontiguousarray(support, dtype=np.float64),
            np.ascontiguousarray(support_labels, dtype=np.int64),
            np.ascontiguousarray(query, dtype=np.float64),
            np.ascontiguousarray(col_marginal, dtype=np.float64),
            float(lam),
            float(alpha),
            int(n_steps),
            float(tol),
            int(max_iters),
        )
        if status == 0:
            return KernelResult(plan, residuals, int(nonconverged), False)
        return fallback.run_map_episode(
            support, support_labels, query, col_marginal, lam, alpha, n_steps, tol, max_iters, force_log=True
        )
    return fallback.run_map_episode(
        support, support_labels, query, col_marginal, lam, alpha, n_steps, tol, max_iters
    )
