"""Pure-numpy implementations of the compiled kernels in ``_kernels.pyx``.

Used whenever the extension module is unavailable.  Results agree with the
compiled versions to floating round-off (the summation orders differ), which
the kernel test suite pins at 1e-12 relative.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 512


def autocov_direct(y, nlags):
    """Lag sums r[k] = (1/M) * sum_t y[t] y[t+k], k = 0..nlags, y centered."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    m = y.shape[0]
    out = np.zeros(nlags + 1)
    out[0] = y @ y
    for k in range(1, min(nlags, m - 1) + 1):
        out[k] = y[: m - k] @ y[k:]
    out /= m
    return out


def moment_weighted_sums(alphas, r):
    """a_i = r[0] + 2 * sum_{k>=1} alphas[i]**k * r[k].

    Powers are built chunk-by-chunk with a running cumulative product so the
    recursion matches the compiled kernel, including its cutoff: a running
    power below 1e-300 is flushed to zero (terms that small cannot move any
    result bit, and subnormal arithmetic is pathologically slow).
    """
    alphas = np.ascontiguousarray(alphas, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    s = alphas.shape[0]
    nk = r.shape[0]
    acc = np.zeros(s)
    p = np.ones(s)
    with np.errstate(under="ignore"):
        for k0 in range(1, nk, _CHUNK):
            kk = min(_CHUNK, nk - k0)
            powers = np.broadcast_to(alphas[:, None], (s, kk)).copy()
            np.multiply.accumulate(powers, axis=1, out=powers)
            powers *= p[:, None]
            np.copyto(powers, 0.0, where=np.abs(powers) < 1e-300)
            acc += powers @ r[k0 : k0 + kk]
            p = powers[:, -1].copy()
            if not np.any(p):
                break
    return r[0] + 2.0 * acc


def ar1_filter(lam, x):
    """out[0] = x[0]; out[t] = lam * out[t-1] + x[t] (scipy lfilter)."""
    from scipy.signal import lfilter

    x = np.ascontiguousarray(x, dtype=np.float64)
    return lfilter([1.0], [1.0, -lam], x)


def mh_path(cum_rows, x0, u):
    """State path via searchsorted on cumulative transition rows."""
    cum_rows = np.ascontiguousarray(cum_rows, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    s = cum_rows.shape[1]
    out = np.empty(u.shape[0] + 1, dtype=np.int64)
    cur = int(x0)
    out[0] = cur
    for t in range(u.shape[0]):
        idx = int(np.searchsorted(cum_rows[cur], u[t], side="right"))
        if idx >= s:
            idx = s - 1
        cur = idx
        out[t + 1] = cur
    return out
