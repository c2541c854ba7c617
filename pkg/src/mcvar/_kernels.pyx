# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: lag sums, moment-grid assembly, AR recursion, MH paths.

Each function has a numpy twin in ``_kernels_py`` with the same signature;
``mcvar.kernels`` picks whichever imports.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def autocov_direct(double[::1] y, Py_ssize_t nlags):
    """Lag sums r[k] = (1/M) * sum_t y[t] y[t+k] for k = 0..nlags.

    ``y`` must already be mean-centered; the divisor is the full length M
    regardless of the number of terms at each lag.
    """
    cdef Py_ssize_t m = y.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(nlags + 1)
    cdef double[::1] r = out
    cdef Py_ssize_t k, t
    cdef double acc
    for k in range(nlags + 1):
        acc = 0.0
        for t in range(m - k):
            acc += y[t] * y[t + k]
        r[k] = acc / m
    return out


def moment_weighted_sums(double[::1] alphas, double[::1] r):
    """a_i = r[0] + 2 * sum_{k>=1} alphas[i]**k * r[k].

    The two-sided inner product of an even lag sequence with the geometric
    basis sequence k -> alpha**|k|.  Powers are formed by the running-product
    recursion; the loop exits once the power drops below 1e-300 (the cutoff
    depends only on alpha, so scaling r rescales the result exactly, and it
    keeps the loop out of subnormal arithmetic, where the recursion can
    stick at the smallest subnormal forever).
    """
    cdef Py_ssize_t s = alphas.shape[0]
    cdef Py_ssize_t nk = r.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(s)
    cdef double[::1] a = out
    cdef Py_ssize_t i, k
    cdef double al, p, acc
    for i in range(s):
        al = alphas[i]
        p = 1.0
        acc = 0.0
        for k in range(1, nk):
            p *= al
            if -1e-300 < p < 1e-300:
                break
            acc += p * r[k]
        a[i] = r[0] + 2.0 * acc
    return out


def ar1_filter(double lam, double[::1] x):
    """out[0] = x[0]; out[t] = lam * out[t-1] + x[t]."""
    cdef Py_ssize_t m = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m)
    cdef double[::1] o = out
    cdef Py_ssize_t t
    cdef double prev
    if m == 0:
        return out
    prev = x[0]
    o[0] = prev
    for t in range(1, m):
        prev = lam * prev + x[t]
        o[t] = prev
    return out


def mh_path(double[:, ::1] cum_rows, Py_ssize_t x0, double[::1] u):
    """State path from per-row cumulative transition probabilities.

    Step t moves from state ``cur`` to the first index whose cumulative
    probability exceeds u[t] (numpy searchsorted side='right' semantics),
    clipped to the last state to guard against rounding in the row sums.
    """
    cdef Py_ssize_t n_steps = u.shape[0]
    cdef Py_ssize_t s = cum_rows.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n_steps + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] path = out
    cdef Py_ssize_t t, lo, hi, mid, cur
    cdef double ut
    cur = x0
    path[0] = cur
    for t in range(n_steps):
        ut = u[t]
        lo = 0
        hi = s
        while lo < hi:
            mid = (lo + hi) // 2
            if cum_rows[cur, mid] <= ut:
                lo = mid + 1
            else:
                hi = mid
        if lo >= s:
            lo = s - 1
        cur = lo
        path[t + 1] = cur
    return out
