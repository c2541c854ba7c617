"""Classical asymptotic variance estimators used for comparison.

Spectral variance with the modified Bartlett window, nonoverlapping and
overlapping batch means, and the multivariate initial sequence estimator
with the Dai-Jones generalized-variance truncation rule.  All return
exactly symmetric d x d matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autocov import Chain, empirical_autocov_matrix
from .errors import DegenerateChainError, ValidationError

METHOD_NAMES = ("sv-bartlett", "bm", "obm", "mtv-init", "mtv-mlse", "oracle")


@dataclass
class EstimatorConfig:
    """A method name plus its tuning knobs.

    ``batch`` is the batch size (bm/obm) or truncation point (sv-bartlett);
    when omitted the floor(sqrt(M)) default applies.  ``n_splits`` and
    ``grid_size`` only affect the moment least-squares method.
    """

    method: str
    batch: int | None = None
    n_splits: int = 5
    grid_size: int = 1001

    def __post_init__(self):
        self.method = self.method.lower()
        if self.method not in METHOD_NAMES:
            raise ValidationError(
                f"unknown method {self.method!r}; expected one of {METHOD_NAMES}"
            )
        if self.batch is not None and self.batch < 1:
            raise ValidationError("batch size must be a positive integer")


def default_batch_size(m, d=None):
    """floor(sqrt(M)), clamped to [2, M/2].  The dimension is accepted for
    signature stability but does not enter the default."""
    if m < 4:
        raise ValidationError("need a chain of length at least 4")
    return int(min(max(2, math.isqrt(m)), m // 2))


def _as_chain(y):
    return y if isinstance(y, Chain) else Chain(np.asarray(y))


def sv_bartlett(chain, b):
    """Spectral variance estimate with the modified Bartlett (triangular)
    window: sum over |k| < b of (1 - |k|/b) R(k)."""
    chain = _as_chain(chain)
    if not 1 <= b <= chain.m:
        raise ValidationError(f"truncation must lie in [1, {chain.m}]")
    lags = empirical_autocov_matrix(chain, nlags=b - 1)
    out = lags.values[0].copy()
    for k in range(1, b):
        sym = lags.values[k] + lags.values[k].T
        out += (1.0 - k / b) * sym
    return (out + out.T) / 2.0


def batch_means(chain, b):
    """Nonoverlapping batch means estimate with batch size b.

    Trailing iterates that do not fill a batch are dropped; the scaling
    factor is b / (a - 1) over a = floor(M/b) batches.
    """
    chain = _as_chain(chain)
    a = chain.m // b
    if b < 1 or a < 2:
        raise ValidationError("need at least 2 complete batches")
    used = chain.values[: a * b]
    means = used.reshape(a, b, chain.d).mean(axis=1)
    centered = means - means.mean(axis=0)
    return (b / (a - 1.0)) * (centered.T @ centered)


def overlapping_batch_means(chain, b):
    """Overlapping batch means estimate over all M - b + 1 windows."""
    chain = _as_chain(chain)
    m = chain.m
    if not 1 <= b <= m - 1:
        raise ValidationError(f"batch size must lie in [1, {m - 1}]")
    csum = np.vstack([np.zeros((1, chain.d)), np.cumsum(chain.values, axis=0)])
    window_means = (csum[b:] - csum[:-b]) / b
    centered = window_means - chain.values.mean(axis=0)
    coef = (m * b) / ((m - b) * (m - b + 1.0))
    return coef * (centered.T @ centered)


def mtv_initial_seq(chain):
    """Multivariate initial sequence estimate (Dai-Jones truncation).

    With symmetrized lag matrices S(k) = (R(k) + R(k)')/2, the cumulative
    sums are

        C_m = -S(0) + 2 * sum_{k=0}^{m} (S(2k) + S(2k+1))

    and the scan stops at the last m before the generalized variance
    det(C_{m+1}) fails to increase, returning that C_m.  A chain whose
    stopping matrix is exactly singular is reported as degenerate.
    """
    chain = _as_chain(chain)
    m = chain.m
    if m < 4:
        raise ValidationError("need a chain of length at least 4")
    lags = empirical_autocov_matrix(chain)

    def pair_sum(k):
        # S(2k) + S(2k+1), zero matrices beyond the chain
        out = np.zeros((chain.d, chain.d))
        for lag in (2 * k, 2 * k + 1):
            if lag <= lags.nlags:
                out += (lags.values[lag] + lags.values[lag].T) / 2.0
        return out

    max_m = (m - 2) // 2
    current = -lags.values[0] + 2.0 * pair_sum(0)
    det_current = float(np.linalg.det(current))
    for idx in range(1, max_m + 1):
        nxt = current + 2.0 * pair_sum(idx)
        det_next = float(np.linalg.det(nxt))
        if det_next <= det_current:
            break
        current = nxt
        det_current = det_next
    if det_current == 0.0:
        raise DegenerateChainError("generalized variance vanished at the stopping index")
    return (current + current.T) / 2.0
