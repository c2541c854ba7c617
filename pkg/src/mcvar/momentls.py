"""Moment least-squares fitting of autocovariance sequences.

An autocovariance sequence of a reversible chain is a moment sequence
m(k) = integral of x^|k| against a nonnegative measure on (-1, 1).  Fitting
projects an empirical sequence r onto the cone of measures supported on a
grid inside [-1+delta, 1-delta], by nonnegative least squares over the full
two-sided lag axis.  With basis sequences e_i(k) = alpha_i^|k| the problem
data have closed forms

    a_i  = r(0) + 2 * sum_{k>=1} alpha_i^k r(k)
    B_ij = sum_{k in Z} (alpha_i alpha_j)^|k| = (1 + a_i a_j) / (1 - a_i a_j)

and the fitted measure yields the long-run variance
sum_k m(k) = sum_i w_i (1 + alpha_i) / (1 - alpha_i) atom by atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .autocov import LagSequence
from .errors import ValidationError
from .numerics import nnls_qp

DEFAULT_GRID_SIZE = 1001
DEFAULT_SPLITS = 5


@dataclass
class SupportGrid:
    """Candidate support points inside [-1+delta, 1-delta], strictly sorted."""

    points: np.ndarray
    delta: float
    _gram: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.size == 0:
            raise ValidationError("support grid is empty")
        if np.any(np.diff(self.points) <= 0):
            raise ValidationError("grid points must be strictly increasing")
        if float(np.abs(self.points).max()) > 1.0 - self.delta + 1e-12:
            raise ValidationError("grid points exceed 1 - delta in magnitude")

    @property
    def size(self):
        return self.points.shape[0]

    def gram(self):
        """B_ij = (1 + a_i a_j) / (1 - a_i a_j), cached on the instance."""
        if self._gram is None:
            prod = np.outer(self.points, self.points)
            self._gram = (1.0 + prod) / (1.0 - prod)
        return self._gram


def _check_delta(delta):
    if not (0.0 < delta < 1.0):
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")


def build_grid(s0=DEFAULT_GRID_SIZE, delta=None):
    """Uniform s0-point grid spanning [-1, 1], filtered to |a| <= 1 - delta."""
    _check_delta(delta)
    if s0 < 3:
        raise ValidationError("s0 must be at least 3")
    pts = np.linspace(-1.0, 1.0, s0)
    pts = pts[np.abs(pts) <= 1.0 - delta]
    if pts.size == 0:
        raise ValidationError(f"delta={delta} filters out the entire grid")
    return SupportGrid(points=pts, delta=delta)


def direct_grid(s0=DEFAULT_GRID_SIZE, delta=None):
    """Uniform s0-point grid placed directly on [-1+delta, 1-delta]."""
    _check_delta(delta)
    if s0 < 2:
        raise ValidationError("s0 must be at least 2")
    return SupportGrid(points=np.linspace(-1.0 + delta, 1.0 - delta, s0), delta=delta)


@dataclass
class MomentMeasure:
    """Discrete fitted measure: atoms (supports[i], weights[i] > 0)."""

    supports: np.ndarray
    weights: np.ndarray
    delta: float

    def __post_init__(self):
        self.supports = np.asarray(self.supports, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.supports.shape != self.weights.shape:
            raise ValidationError("supports and weights must have equal length")

    @property
    def natoms(self):
        return self.supports.shape[0]


def eval_sequence(measure, k):
    """Sequence value(s) sum_i w_i * alpha_i^|k| with the 0**0 = 1 convention."""
    lags = np.abs(np.asarray(k, dtype=np.int64))
    scalar = lags.ndim == 0
    lags = np.atleast_1d(lags)
    if measure.natoms == 0:
        out = np.zeros(lags.shape[0])
    else:
        with np.errstate(under="ignore"):
            powers = measure.supports[None, :] ** lags[:, None]
        out = powers @ measure.weights
    return float(out[0]) if scalar else out


def avar_from_measure(measure):
    """Two-sided sum of the fitted sequence: sum_i w_i (1+a_i)/(1-a_i)."""
    if measure.natoms == 0:
        return 0.0
    if np.abs(measure.supports).max() >= 1.0:
        raise ValidationError("measure has an atom with |support| >= 1")
    return float(np.sum(measure.weights * (1.0 + measure.supports) / (1.0 - measure.supports)))


def moment_sums(points, rvalues):
    """Inner products a_i = r(0) + 2 sum_{k>=1} points_i^k r(k)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    rvalues = np.ascontiguousarray(rvalues, dtype=np.float64)
    return kernels.moment_weighted_sums(points, rvalues)


def project_momentls(r, delta, grid=None, s0=DEFAULT_GRID_SIZE, nnls_tol=None):
    """Project a lag sequence onto the [-1+delta, 1-delta] moment cone.

    Parameters
    ----------
    r : LagSequence or 1-d array of lag values starting at k = 0
    delta : float in (0, 1)
    grid : SupportGrid, optional
        Shared grid (its cached Gram matrix is reused across projections).
        When omitted, a uniform s0-point grid on [-1+delta, 1-delta] is used.

    Returns
    -------
    MomentMeasure with the zero-weight grid points pruned (weights below
    1e-12 of the largest are solver round-off of an exact zero and are
    dropped with them).  A degenerate input with r(0) <= 0 (constant chain)
    yields the empty measure without invoking the solver.
    """
    _check_delta(delta)
    values = r.values if isinstance(r, LagSequence) else np.asarray(r, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValidationError("r must be a nonempty 1-d lag sequence")
    if not np.all(np.isfinite(values)):
        raise ValidationError("r contains non-finite values")
    if values[0] <= 0.0:
        return MomentMeasure(supports=np.empty(0), weights=np.empty(0), delta=delta)
    if grid is None:
        grid = direct_grid(s0, delta)
    elif float(np.abs(grid.points).max()) > 1.0 - delta + 1e-12:
        raise ValidationError("grid is inconsistent with delta")
    a = moment_sums(grid.points, values)
    w = nnls_qp(a, grid.gram(), tol=nnls_tol)
    keep = w > 1e-12 * float(w.max(initial=0.0))
    return MomentMeasure(supports=grid.points[keep], weights=w[keep], delta=delta)


def signed_l2_distance(supports1, weights1, supports2, weights2):
    """l2(Z) distance between two signed atomic moment sequences, in closed form.

    For m(k) = sum_i c_i a_i^|k|, the squared norm over all integer lags is
    c' G c with G_ij = (1 + a_i a_j)/(1 - a_i a_j); the difference of two
    atom sets is evaluated by concatenation with negated second weights.
    """
    sup = np.concatenate([np.asarray(supports1, float), np.asarray(supports2, float)])
    wts = np.concatenate([np.asarray(weights1, float), -np.asarray(weights2, float)])
    if sup.size == 0:
        return 0.0
    if np.abs(sup).max() >= 1.0:
        raise ValidationError("atoms must lie strictly inside (-1, 1)")
    prod = np.outer(sup, sup)
    gram = (1.0 + prod) / (1.0 - prod)
    sq = float(wts @ gram @ wts)
    return math.sqrt(max(sq, 0.0))


# ---------------------------------------------------------------------------
# delta tuning


@dataclass
class DeltaEstimate:
    """Tuned half-gap: 0.8 times the mean of the per-split estimates."""

    value: float
    per_split: list
    batch_size: int


def _split_lag_sums(yc, ell, batch):
    """Window lag sums w(k) = sum_{u in block ell} yc[u-k] yc[u], k = 0..B-1.

    Block 1 truncates at the start of the series (u >= k); later blocks keep
    a full B terms per lag, reaching up to k positions into the preceding
    block.  Evaluated by FFT cross-correlation.
    """
    lo = (ell - 1) * batch
    block = yc[lo : lo + batch]
    n = _fft_pow2(3 * batch)
    fb = np.fft.rfft(block, n)
    if ell == 1:
        out = np.fft.irfft(fb * np.conj(fb), n)[:batch]
        return out
    pre = yc[lo - (batch - 1) : lo + batch]
    fp = np.fft.rfft(pre, n)
    corr = np.fft.irfft(fp * np.conj(fb), n)
    return corr[batch - 1 :: -1][:batch].copy()


def _fft_pow2(n):
    size = 1
    while size < n:
        size *= 2
    return size


def split_delta(rvals, batch):
    """Per-split half-gap from a split autocovariance sequence.

    Scans t = 0, 2, 4, ... for the first r(t+2) <= 0 with t + 2 <= B - 1.
    A hit at t = 0 gives delta = 1 (the limit of the formula); no hit gives
    the floor 1/B; otherwise

        delta = max(1 - exp(-log(B) / (2 t)), 1 / B).
    """
    even_tail = rvals[2::2]  # lags 2, 4, 6, ...
    hits = np.flatnonzero(even_tail <= 0.0)
    if hits.size == 0:
        return None, 1.0 / batch
    m = 2 * int(hits[0])
    if m == 0:
        return 0, 1.0
    return m, max(1.0 - math.exp(-math.log(batch) / (2.0 * m)), 1.0 / batch)


def tune_delta(y, n_splits=DEFAULT_SPLITS):
    """Data-driven half-gap for a univariate chain.

    The globally centered series is cut into L blocks of size B = floor(M/L);
    each block contributes an estimate from the first even lag at which its
    autocovariance turns nonpositive, and the result is 0.8 times the mean.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValidationError("y must be 1-dimensional")
    if n_splits < 1:
        raise ValidationError("need at least one split")
    m = y.shape[0]
    if m < 2 * n_splits:
        raise ValidationError(f"chain of length {m} too short for {n_splits} splits")
    if not np.all(np.isfinite(y)):
        raise ValidationError("y contains non-finite values")
    yc = y - y.mean()
    batch = m // n_splits
    per_split = []
    for ell in range(1, n_splits + 1):
        rvals = _split_lag_sums(yc, ell, batch) / batch
        _, delta_l = split_delta(rvals, batch)
        per_split.append(delta_l)
    value = 0.8 * (sum(per_split) / n_splits)
    return DeltaEstimate(value=value, per_split=per_split, batch_size=batch)
