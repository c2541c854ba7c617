"""Numerical kernels shared by the estimators.

Self-contained on purpose: the nonnegative QP solver and the symmetric
eigensolver sit on the critical path of the moment least-squares estimator,
so they are implemented here (active-set and cyclic Jacobi respectively)
rather than delegated, and the test suite certifies them against
independent oracles (KKT conditions, reconstruction identities, scipy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError

# ---------------------------------------------------------------------------
# nonnegative quadratic programming


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")


def nnls_qp(a, B, tol=None, max_iter=None):
    """Minimize w'Bw - 2a'w subject to w >= 0 (Lawson-Hanson active set).

    This is nonnegative least squares in Gram form: B is the Gram matrix of
    the basis and a the basis inner products with the target.  Returns the
    full-length weight vector.  The result satisfies the KKT conditions

        g = 2(Bw - a),   g_i >= -tol,   |w_i g_i| <= tol  for all i.

    Parameters
    ----------
    a : (s,) array
    B : (s, s) symmetric positive-semidefinite array
    tol : float, optional
        KKT tolerance; defaults to 1e-10 * (1 + max|a|).
    max_iter : int, optional
        Cap on active-set iterations, default 10*s.  On hitting the cap a
        ConvergenceError carrying the best iterate and its KKT residual is
        raised.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    _check_finite("a", a)
    _check_finite("B", B)
    s = a.shape[0]
    if B.shape != (s, s):
        raise ValidationError(f"B must be {s}x{s}, got {B.shape}")
    scale = max(1.0, float(np.abs(B).max()))
    if np.abs(B - B.T).max() > 1e-12 * scale:
        raise ValidationError("B is not symmetric")
    if tol is None:
        tol = 1e-10 * (1.0 + float(np.abs(a).max(initial=0.0)))
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if max_iter is None:
        max_iter = max(10 * s, 30)

    w = np.zeros(s)
    passive = np.zeros(s, dtype=bool)
    grad = -a.copy()  # Bw - a at w = 0; the certified gradient is twice this
    cut = tol / 2.0
    iters = 0

    def _solve_passive(idx):
        sub = B[np.ix_(idx, idx)]
        try:
            return np.linalg.solve(sub, a[idx])
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(sub, a[idx], rcond=None)[0]

    while True:
        candidates = ~passive & (grad < -cut)
        if not candidates.any():
            break
        j = int(np.flatnonzero(candidates)[np.argmin(grad[candidates])])
        passive[j] = True
        while True:
            iters += 1
            if iters > max_iter:
                g = 2.0 * (B @ w - a)
                resid = max(float(np.max(-g, initial=0.0)), float(np.abs(w * g).max(initial=0.0)))
                raise ConvergenceError(
                    f"nnls_qp: no convergence in {max_iter} iterations "
                    f"(kkt residual {resid:.3e})",
                    iterate=w.copy(),
                    residual=resid,
                )
            idx = np.flatnonzero(passive)
            z = _solve_passive(idx)
            if np.all(z > 0.0):
                w.fill(0.0)
                w[idx] = z
                break
            # step toward z until the first passive coordinate hits zero;
            # a blocked coordinate already at zero forces a zero-length step
            # and is dropped outright, so the passive set always shrinks
            wp = w[idx]
            blocked = z <= 0.0
            denom = wp - z
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(
                    blocked, np.where(denom > 0.0, wp / denom, 0.0), np.inf
                )
            theta = float(ratios.min())
            wnew = wp + theta * (z - wp)
            drop = blocked & (ratios <= theta)
            wnew[drop] = 0.0
            wnew[wnew < 0.0] = 0.0
            w.fill(0.0)
            w[idx] = wnew
            passive[idx[wnew == 0.0]] = False
            if not passive.any():
                break
        idx = np.flatnonzero(passive)
        grad = B[:, idx] @ w[idx] - a if idx.size else -a.copy()

    return w


def nnls_kkt_residual(w, a, B):
    """Worst KKT violation of w for the nnls_qp problem (0 at the optimum)."""
    g = 2.0 * (B @ w - a)
    return max(float(np.max(-g, initial=0.0)), float(np.abs(w * g).max(initial=0.0)))


# ---------------------------------------------------------------------------
# symmetric eigendecomposition


@dataclass
class EigenDecomposition:
    """Eigenvalues in descending order; columns of ``vectors`` match them."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def sym_eigen(A, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below
    tol * ||A||_F.  Intended for the small dense matrices this package
    handles (d up to a few hundred).
    """
    A = np.array(A, dtype=np.float64)
    _check_finite("A", A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    d = A.shape[0]
    norm = float(np.linalg.norm(A))
    if np.abs(A - A.T).max() > 1e-10 * max(norm, 1e-300):
        raise ValidationError("matrix is not symmetric")
    if d == 1:
        return EigenDecomposition(values=A[0].copy(), vectors=np.ones((1, 1)))
    A = (A + A.T) / 2.0
    V = np.eye(d)
    if norm == 0.0:
        return EigenDecomposition(values=np.zeros(d), vectors=V)

    def _offdiag(mat):
        off = mat.copy()
        np.fill_diagonal(off, 0.0)
        return float(np.linalg.norm(off))

    for _ in range(max_sweeps):
        if _offdiag(A) <= tol * norm:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                sn = t * c
                app, aqq = A[p, p], A[q, q]
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - sn * col_q
                A[:, q] = sn * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - sn * row_q
                A[q, :] = sn * row_p + c * row_q
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                col_p = V[:, p].copy()
                col_q = V[:, q].copy()
                V[:, p] = c * col_p - sn * col_q
                V[:, q] = sn * col_p + c * col_q
    else:
        if _offdiag(A) > tol * norm:
            raise ConvergenceError(
                f"sym_eigen: off-diagonal norm {_offdiag(A):.3e} after "
                f"{max_sweeps} sweeps"
            )

    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values=values[order], vectors=V[:, order])


# ---------------------------------------------------------------------------
# chi-squared quantiles


def _gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x), series / continued fraction."""
    if x <= 0.0:
        return 0.0
    log_prefac = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # power series
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(1000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return total * math.exp(log_prefac)
    # Lentz continued fraction for the upper tail Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return 1.0 - math.exp(log_prefac) * h


def chi2_quantile(p, dof):
    """Quantile of the chi-squared law: the x with P(chi2_dof <= x) = p.

    Bisection on the regularized incomplete gamma CDF; accurate to ~1e-12
    relative, no external dependency.
    """
    if not 0.0 <= p < 1.0:
        raise ValidationError(f"p must lie in [0, 1), got {p}")
    if int(dof) != dof or dof < 1:
        raise ValidationError(f"dof must be a positive integer, got {dof}")
    dof = int(dof)
    if p == 0.0:
        return 0.0
    a = dof / 2.0

    def cdf(x):
        return _gammainc_lower(a, x / 2.0)

    hi = max(4.0 * dof, 20.0)
    while cdf(hi) < p:
        hi *= 2.0
        if hi > 1e300:  # pragma: no cover - unreachable for p < 1
            raise NumericalError("chi2_quantile: bracket expansion failed")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# reproducible random streams


class RngStream:
    """Counter-based random stream (numpy Philox keyed by (seed, stream id)).

    Identical (seed, stream_id) pairs reproduce identical draw sequences on
    any process; distinct stream ids give statistically independent streams.
    Bit-compatibility across numpy versions or other languages is not
    promised; reproducibility within an installation is.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def draw_uniform(self, size=None):
        """Uniform draw(s) on [0, 1)."""
        out = self._gen.random(size)
        return float(out) if size is None else out

    def draw_normal(self, size=None):
        """Standard normal draw(s)."""
        out = self._gen.standard_normal(size)
        return float(out) if size is None else out

    def draw_categorical(self, probs):
        """Index i with probability probs[i], by inversion of one uniform."""
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValidationError("probs must be a nonempty 1-d vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("probs must be finite and nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValidationError("probs must sum to 1 within 1e-12")
        cum = np.cumsum(probs)
        idx = int(np.searchsorted(cum, self.draw_uniform(), side="right"))
        return min(idx, probs.size - 1)


def rng_stream(seed, stream_id=0):
    """Factory matching the operation name used throughout the package."""
    return RngStream(seed, stream_id)
