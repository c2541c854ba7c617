"""Multivariate moment least-squares asymptotic variance estimation.

Diagonal entries come from fitting each component's autocovariance sequence.
An off-diagonal cross-covariance sequence is recovered by polarization: with
weights a = 1/s_i, b = 1/s_j (s_i the empirical standard deviation of
component i), the sequences of the combined series a*g_i + b*g_j and
a*g_i - b*g_j are fitted on a common cone with half-gap min(delta_i,
delta_j), and

    gamma_ij(k) = (plus(k) - minus(k)) / (4ab).

The element-wise matrix so assembled is symmetric but not necessarily PSD;
when its smallest eigenvalue is negative, the eigenvalues are re-estimated
by univariate fits along the rotated chain (chain times eigenvectors) and
the matrix is rebuilt, which is PSD by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autocov import Chain, combine_components, empirical_autocov
from .errors import DegenerateChainError, NumericalError, ValidationError
from .momentls import (
    DEFAULT_GRID_SIZE,
    DEFAULT_SPLITS,
    MomentMeasure,
    avar_from_measure,
    build_grid,
    eval_sequence,
    project_momentls,
    tune_delta,
)
from .numerics import chi2_quantile, sym_eigen

# an eigenvalue this far below zero (relative to the largest) still counts
# as PSD, so rounding cannot trigger a spurious refinement
PSD_TOLERANCE = 1e-10


@dataclass
class DeltaVector:
    """Per-component half-gaps delta_1..delta_d."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValidationError("delta vector must be a nonempty 1-d array")
        if np.any(self.values <= 0.0) or np.any(self.values >= 1.0):
            raise ValidationError("each delta must lie in (0, 1)")

    @property
    def d(self):
        return self.values.shape[0]

    @property
    def floor(self):
        return float(self.values.min())


def tune_delta_vector(chain, n_splits=DEFAULT_SPLITS):
    """Componentwise delta tuning of a multivariate chain."""
    chain = chain if isinstance(chain, Chain) else Chain(np.asarray(chain))
    vals = [tune_delta(chain.column(i), n_splits).value for i in range(chain.d)]
    return DeltaVector(values=np.array(vals))


@dataclass
class SignedMomentPair:
    """Fits of the two polarization series; represents a signed measure.

    The represented cross-covariance sequence is
    (plus(k) - minus(k)) / (4ab) and its two-sided lag sum follows atom by
    atom from the same difference of the per-measure sums.
    """

    plus: MomentMeasure
    minus: MomentMeasure
    a: float
    b: float
    delta: float

    def sequence(self, k):
        scale = 1.0 / (4.0 * self.a * self.b)
        return scale * (eval_sequence(self.plus, k) - eval_sequence(self.minus, k))

    def avar(self):
        scale = 1.0 / (4.0 * self.a * self.b)
        return scale * (avar_from_measure(self.plus) - avar_from_measure(self.minus))

    def signed_atoms(self):
        """Concatenated (supports, signed weights) of the represented measure."""
        scale = 1.0 / (4.0 * self.a * self.b)
        supports = np.concatenate([self.plus.supports, self.minus.supports])
        weights = np.concatenate([scale * self.plus.weights, -scale * self.minus.weights])
        return supports, weights


class _GridCache:
    """One SupportGrid (with cached Gram matrix) per distinct delta value."""

    def __init__(self, s0=DEFAULT_GRID_SIZE):
        self.s0 = s0
        self._grids = {}

    def get(self, delta):
        key = float(delta)
        if key not in self._grids:
            self._grids[key] = build_grid(self.s0, key)
        return self._grids[key]


def _column_lag0(chain, i):
    yc = chain.values[:, i] - chain.values[:, i].mean()
    return float(yc @ yc) / chain.m


def estimate_cross_cov(chain, i, j, deltas, grid_cache=None, s0=DEFAULT_GRID_SIZE, weights=None):
    """MomentLS estimate of the (i, j) auto/cross-covariance sequence.

    For i == j this is the projection of component i's empirical
    autocovariance at delta_i, returned as a MomentMeasure.  For i != j a
    SignedMomentPair is returned; ``weights`` overrides the default
    (1/s_i, 1/s_j) scaling and exists for experimentation, any nonzero pair
    is admissible.
    """
    chain = chain if isinstance(chain, Chain) else Chain(np.asarray(chain))
    deltas = deltas if isinstance(deltas, DeltaVector) else DeltaVector(np.asarray(deltas))
    if deltas.d != chain.d:
        raise ValidationError("delta vector length must match chain dimension")
    if grid_cache is None:
        grid_cache = _GridCache(s0)
    if i == j:
        delta_i = float(deltas.values[i])
        r = empirical_autocov(chain.column(i))
        return project_momentls(r, delta_i, grid=grid_cache.get(delta_i))
    delta_ij = float(min(deltas.values[i], deltas.values[j]))
    if weights is None:
        r0_i = _column_lag0(chain, i)
        r0_j = _column_lag0(chain, j)
        if r0_i <= 0.0 or r0_j <= 0.0:
            raise DegenerateChainError(
                f"component {i if r0_i <= 0 else j} has zero empirical variance"
            )
        a = 1.0 / np.sqrt(r0_i)
        b = 1.0 / np.sqrt(r0_j)
    else:
        a, b = float(weights[0]), float(weights[1])
        if a == 0.0 or b == 0.0 or not (np.isfinite(a) and np.isfinite(b)):
            raise ValidationError("weights must be finite and nonzero")
    grid = grid_cache.get(delta_ij)
    plus = project_momentls(
        empirical_autocov(combine_components(chain, i, j, a, b, sign=1)),
        delta_ij,
        grid=grid,
    )
    minus = project_momentls(
        empirical_autocov(combine_components(chain, i, j, a, b, sign=-1)),
        delta_ij,
        grid=grid,
    )
    return SignedMomentPair(plus=plus, minus=minus, a=a, b=b, delta=delta_ij)


@dataclass
class AvarMatrix:
    """Asymptotic variance estimate with its provenance."""

    matrix: np.ndarray
    method: str
    deltas: np.ndarray | None = None
    refined: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.matrix.shape[0]


def sigma_pw(chain, deltas, s0=DEFAULT_GRID_SIZE, grid_cache=None):
    """Element-wise plug-in estimate of the asymptotic variance matrix.

    Entry (i, j) is computed once and mirrored, so the result is exactly
    symmetric; the diagonal is nonnegative by construction but the matrix
    as a whole need not be PSD.
    """
    chain = chain if isinstance(chain, Chain) else Chain(np.asarray(chain))
    deltas = deltas if isinstance(deltas, DeltaVector) else DeltaVector(np.asarray(deltas))
    if deltas.d != chain.d:
        raise ValidationError("delta vector length must match chain dimension")
    if grid_cache is None:
        grid_cache = _GridCache(s0)
    d = chain.d
    out = np.zeros((d, d))
    for i in range(d):
        out[i, i] = avar_from_measure(estimate_cross_cov(chain, i, i, deltas, grid_cache))
    for i in range(d):
        for j in range(i + 1, d):
            pair = estimate_cross_cov(chain, i, j, deltas, grid_cache)
            out[i, j] = pair.avar()
            out[j, i] = out[i, j]
    return AvarMatrix(matrix=out, method="momentls-pw", deltas=deltas.values.copy())


def sigma_psd(chain, pw, deltas, s0=DEFAULT_GRID_SIZE, grid_cache=None):
    """PSD refinement: re-estimate the eigenvalues along pw's eigenvectors.

    The chain is rotated into the eigenbasis of the plug-in estimate and
    each rotated component's long-run variance is fitted univariately at the
    smallest tuned half-gap; rebuilding U diag(lambda) U' with those
    nonnegative values gives a PSD matrix.
    """
    chain = chain if isinstance(chain, Chain) else Chain(np.asarray(chain))
    deltas = deltas if isinstance(deltas, DeltaVector) else DeltaVector(np.asarray(deltas))
    pw_matrix = pw.matrix if isinstance(pw, AvarMatrix) else np.asarray(pw, dtype=np.float64)
    if grid_cache is None:
        grid_cache = _GridCache(s0)
    eig = sym_eigen(pw_matrix)
    rotated = chain.values @ eig.vectors
    delta_floor = deltas.floor
    grid = grid_cache.get(delta_floor)
    lams = np.empty(chain.d)
    for j in range(chain.d):
        r = empirical_autocov(rotated[:, j])
        lams[j] = avar_from_measure(project_momentls(r, delta_floor, grid=grid))
    out = (eig.vectors * lams) @ eig.vectors.T
    out = (out + out.T) / 2.0
    return AvarMatrix(
        matrix=out,
        method="momentls-psd",
        deltas=deltas.values.copy(),
        refined=True,
        extra={"eigenvalues": lams},
    )


def momentls_avar(chain, deltas=None, n_splits=DEFAULT_SPLITS, s0=DEFAULT_GRID_SIZE):
    """The moment least-squares asymptotic variance matrix estimate.

    Tunes the half-gaps when none are given, forms the element-wise plug-in
    matrix, and falls back to the eigenvalue refinement only when the
    plug-in matrix has an eigenvalue below -1e-10 * max(1, lambda_max).
    """
    chain = chain if isinstance(chain, Chain) else Chain(np.asarray(chain))
    if deltas is None:
        deltas = tune_delta_vector(chain, n_splits)
    elif not isinstance(deltas, DeltaVector):
        deltas = DeltaVector(np.asarray(deltas))
    cache = _GridCache(s0)
    pw = sigma_pw(chain, deltas, grid_cache=cache)
    eig = sym_eigen(pw.matrix)
    lam_min = float(eig.values[-1])
    lam_max = float(eig.values[0])
    if lam_min >= -PSD_TOLERANCE * max(1.0, lam_max):
        return pw
    return sigma_psd(chain, pw, deltas, grid_cache=cache)


# ---------------------------------------------------------------------------
# evaluation metrics


def relative_error(estimate, truth):
    """Frobenius norm of the truth-whitened error S^{-1/2}(E - S)S^{-1/2}."""
    estimate = estimate.matrix if isinstance(estimate, AvarMatrix) else np.asarray(estimate, float)
    truth = np.asarray(truth, dtype=np.float64)
    eig = sym_eigen(truth)
    if eig.values[-1] <= 1e-12 * max(float(eig.values[0]), 0.0):
        raise ValidationError("truth matrix must be symmetric positive definite")
    root_inv = (eig.vectors / np.sqrt(eig.values)) @ eig.vectors.T
    return float(np.linalg.norm(root_inv @ (estimate - truth) @ root_inv))


def region_contains(mu_hat, sigma_hat, mu, m, alpha=0.05):
    """Whether mu lies in the level-(1-alpha) confidence ellipsoid.

    True iff M (mu_hat - mu)' sigma_hat^{-1} (mu_hat - mu) is strictly below
    the chi-squared quantile at probability 1 - alpha with d degrees of
    freedom.  A numerically singular sigma_hat is signaled, never ignored.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    sigma_hat = sigma_hat.matrix if isinstance(sigma_hat, AvarMatrix) else np.asarray(sigma_hat, float)
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=np.float64))
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    if mu_hat.shape != mu.shape or mu_hat.shape[0] != sigma_hat.shape[0]:
        raise ValidationError("dimension mismatch between means and matrix")
    eig = sym_eigen(sigma_hat)
    lam_max = float(eig.values[0])
    if eig.values[-1] <= 1e-12 * max(lam_max, 0.0) or lam_max <= 0.0:
        raise NumericalError("sigma_hat is numerically singular")
    diff = mu_hat - mu
    rotated = eig.vectors.T @ diff
    quad = float(m) * float(rotated @ (rotated / eig.values))
    return quad < chi2_quantile(1.0 - alpha, mu.shape[0])
