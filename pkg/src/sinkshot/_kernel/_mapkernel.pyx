# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode loop: fused cost build, scaling iterations, center updates.

Linear-domain only; returns status 1 on numerical blow-up so the caller can
re-run the episode through the log-domain fallback. Semantics mirror
``sinkshot._kernel.fallback.run_map_episode``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite

cnp.import_array()


def run_map_episode(
    double[:, ::1] support,
    cnp.int64_t[::1] support_labels,
    double[:, ::1] query,
    double[::1] col_marginal,
    double lam,
    double alpha,
    int n_steps,
    double tol,
    int max_iters,
):
    """Returns (plan, residuals, nonconverged, status); status 1 = blow-up."""
    cdef Py_ssize_t ns = support.shape[0]
    cdef Py_ssize_t nq = query.shape[0]
    cdef Py_ssize_t d = query.shape[1]
    cdef Py_ssize_t w = col_marginal.shape[0]

    plan_arr = np.zeros((nq, w))
    res_arr = np.empty(n_steps)
    cdef double[:, ::1] plan = plan_arr
    cdef double[::1] res = res_arr

    sup_sums_arr = np.zeros((w, d))
    sup_counts_arr = np.zeros(w)
    centers_arr = np.empty((w, d))
    cost_arr = np.empty((nq, w))
    kern_arr = np.empty((nq, w))
    u_arr = np.ones(nq)
    v_arr = np.ones(w)
    kv_arr = np.empty(nq)
    ktu_arr = np.empty(w)
    colsum_arr = np.empty(w)
    cdef double[:, ::1] sup_sums = sup_sums_arr
    cdef double[::1] sup_counts = sup_counts_arr
    cdef double[:, ::1] centers = centers_arr
    cdef double[:, ::1] cost = cost_arr
    cdef double[:, ::1] kern = kern_arr
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] kv = kv_arr
    cdef double[::1] ktu = ktu_arr
    cdef double[::1] colsum = colsum_arr

    cdef Py_ssize_t i, j, k, step, it
    cdef double acc, diff, row_min, residual, row_err, col_err, entry
    cdef int nonconverged = 0
    cdef bint converged

    for i in range(ns):
        j = support_labels[i]
        sup_counts[j] += 1.0
        for k in range(d):
            sup_sums[j, k] += support[i, k]
    for j in range(w):
        for k in range(d):
            centers[j, k] = sup_sums[j, k] / sup_counts[j]

    for step in range(n_steps):
        # squared distances, shifted per row so the minimum maps to exp(0)
        for i in range(nq):
            row_min = -1.0
            for j in range(w):
                acc = 0.0
                for k in range(d):
                    diff = query[i, k] - centers[j, k]
                    acc += diff * diff
                cost[i, j] = acc
                if row_min < 0.0 or acc < row_min:
                    row_min = acc
            for j in range(w):
                kern[i, j] = exp(-lam * (cost[i, j] - row_min))

        for j in range(w):
            v[j] = 1.0
        converged = False
        residual = 0.0
        for it in range(max_iters):
            for i in range(nq):
                acc = 0.0
                for j in range(w):
                    acc += kern[i, j] * v[j]
                u[i] = 1.0 / acc
                if not isfinite(u[i]):
                    return plan_arr, res_arr, nonconverged, 1
            for j in range(w):
                acc = 0.0
                for i in range(nq):
                    acc += kern[i, j] * u[i]
                ktu[j] = acc
            for j in range(w):
                v[j] = col_marginal[j] / ktu[j]
                if not isfinite(v[j]):
                    return plan_arr, res_arr, nonconverged, 1
            row_err = 0.0
            col_err = 0.0
            for j in range(w):
                colsum[j] = 0.0
            for i in range(nq):
                acc = 0.0
                for j in range(w):
                    entry = u[i] * kern[i, j] * v[j]
                    plan[i, j] = entry
                    acc += entry
                    colsum[j] += entry
                diff = fabs(acc - 1.0)
                if diff > row_err:
                    row_err = diff
            for j in range(w):
                diff = fabs(colsum[j] - col_marginal[j])
                if diff > col_err:
                    col_err = diff
            residual = row_err if row_err > col_err else col_err
            if residual <= tol:
                converged = True
                break
        res[step] = residual
        if not converged:
            nonconverged += 1

        for j in range(w):
            for k in range(d):
                acc = sup_sums[j, k]
                for i in range(nq):
                    acc += plan[i, j] * query[i, k]
                acc /= sup_counts[j] + colsum[j]
                centers[j, k] += alpha * (acc - centers[j, k])

    return plan_arr, res_arr, nonconverged, 0
