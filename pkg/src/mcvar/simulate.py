"""Test-bed chain simulators with exact asymptotic variance ground truth.

Two reversible designs: a randomly generated discrete-state
Metropolis-Hastings chain, whose truth follows from the eigendecomposition
of its transition matrix, and a symmetric VAR(1) process, whose truth has a
closed form.  Models are deterministic functions of their seed, serialize
to JSON for reproducibility audits, and are built once per benchmark run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .autocov import Chain
from .errors import NumericalError, ValidationError
from .numerics import RngStream, sym_eigen

# stream ids: 0 builds models, chains derive their own (see harness)
MODEL_STREAM = 0

MH_DEFAULTS = {"s": 100, "d": 4, "rho": 0.5}

VAR1_PRESETS = {
    "1": np.array([0.9, 0.9, -0.9, -0.9]),
    "2": np.array([0.9, 0.9, 0.9, 0.9]),
}
VAR1_PRESET_ALIASES = {"mixed": "1", "positive": "2"}


@dataclass
class GroundTruth:
    """Exact asymptotic variance, mean, and cross-covariance atoms.

    The atoms represent gamma_ij(k) = sum_l coeffs[l, i] coeffs[l, j]
    supports[l]^|k|; they are empty when no exact atomic form is available.
    """

    sigma: np.ndarray
    mu: np.ndarray
    atom_supports: np.ndarray
    atom_coeffs: np.ndarray

    def cross_cov_atoms(self, i, j):
        """(supports, signed weights) of the (i, j) sequence."""
        return self.atom_supports, self.atom_coeffs[:, i] * self.atom_coeffs[:, j]

    def cross_cov(self, i, j, lags):
        supports, weights = self.cross_cov_atoms(i, j)
        lags = np.abs(np.asarray(lags))
        with np.errstate(under="ignore"):
            powers = supports[None, :] ** lags[:, None]
        return powers @ weights

    def to_dict(self):
        return {
            "sigma": self.sigma.tolist(),
            "mu": self.mu.tolist(),
            "atom_supports": self.atom_supports.tolist(),
            "atom_coeffs": self.atom_coeffs.tolist(),
        }


# ---------------------------------------------------------------------------
# discrete-state Metropolis-Hastings


@dataclass
class DiscreteMHModel:
    """Random discrete-state MH chain: target pi, kernel Q, function values g."""

    s: int
    d: int
    rho: float
    seed: int
    pi: np.ndarray
    q: np.ndarray
    g: np.ndarray
    proposal: np.ndarray | None = None

    def validate(self, tol=1e-12):
        row_sums = self.q.sum(axis=1)
        if np.abs(row_sums - 1.0).max() > tol:
            raise ValidationError("transition rows do not sum to 1")
        flux = self.pi[:, None] * self.q
        if np.abs(flux - flux.T).max() > tol:
            raise ValidationError("detailed balance violated")
        if np.any(self.pi <= 0.0):
            raise ValidationError("target probabilities must be positive")

    def to_dict(self, truth=None):
        out = {
            "kind": "mh",
            "seed": self.seed,
            "s": self.s,
            "d": self.d,
            "rho": self.rho,
            "pi": self.pi.tolist(),
            "q": self.q.tolist(),
            "g": self.g.tolist(),
        }
        if truth is not None:
            out["truth"] = truth.to_dict()
        return out


def _g_covariance(d, rho):
    # component j has variance j^2; correlation decays geometrically
    idx = np.arange(1, d + 1, dtype=np.float64)
    scale = np.outer(idx, idx)
    corr = rho ** np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
    return scale * corr


def _spectral_sqrt(mat):
    eig = sym_eigen(mat)
    root = np.sqrt(np.maximum(eig.values, 0.0))
    return (eig.vectors * root) @ eig.vectors.T


def build_mh_model(seed, s=None, d=None, rho=None):
    """Randomly generated discrete-state MH model, reversible by construction.

    The target and the proposal rows are normalized iid Uniform(0, 1) draws;
    the MH kernel is assembled from the symmetric flux min(pi_i P_ij,
    pi_j P_ji), which makes detailed balance hold to round-off.  Function
    values are iid rows g(i) ~ N(0, S_g) with S_g[j, j] = j^2 and geometric
    cross-correlation.
    """
    s = MH_DEFAULTS["s"] if s is None else int(s)
    d = MH_DEFAULTS["d"] if d is None else int(d)
    rho = MH_DEFAULTS["rho"] if rho is None else float(rho)
    if s < 2 or d < 1 or not abs(rho) < 1.0:
        raise ValidationError("need s >= 2, d >= 1, |rho| < 1")
    stream = RngStream(seed, MODEL_STREAM)
    u = stream.draw_uniform(s)
    pi = u / u.sum()
    v = stream.draw_uniform((s, s))
    proposal = v / v.sum(axis=1, keepdims=True)
    z = stream.draw_normal((s, d))
    g = z @ _spectral_sqrt(_g_covariance(d, rho)).T

    flow = pi[:, None] * proposal
    flux = np.minimum(flow, flow.T)
    q = flux / pi[:, None]
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, 1.0 - q.sum(axis=1))

    model = DiscreteMHModel(
        s=s, d=d, rho=rho, seed=int(seed), pi=pi, q=q, g=g, proposal=proposal
    )
    model.validate()
    return model


def mh_ground_truth(model):
    """Exact ground truth from the eigendecomposition of the MH kernel.

    The kernel is symmetrized by the similarity D_sqrt(pi) Q D_sqrt(pi)^-1,
    whose eigenvectors give pi-orthonormal eigenfunctions phi_l; with
    coefficients c_il = <g_i, phi_l>_pi the asymptotic variance is

        Sigma_ij = sum_{l >= 2} c_il c_jl (1 + lambda_l) / (1 - lambda_l)

    over all non-unit eigenvalues, and (lambda_l, c_l) are exported as the
    cross-covariance atoms.
    """
    sqrt_pi = np.sqrt(model.pi)
    flow = model.pi[:, None] * model.q
    flux = np.minimum(flow, flow.T)  # exactly symmetric
    sym = flux / np.outer(sqrt_pi, sqrt_pi)
    np.fill_diagonal(sym, np.diag(model.q))
    eig = sym_eigen(sym)
    if abs(eig.values[0] - 1.0) > 1e-8:
        raise NumericalError("kernel has no unit eigenvalue; model is invalid")
    if model.s > 1 and eig.values[1] > 1.0 - 1e-8:
        raise NumericalError("unit eigenvalue is not simple; chain not ergodic")
    # coefficients <g_i, phi_l>_pi; the unit eigenvalue (index 0) is excluded
    coeffs = eig.vectors.T @ (model.g * sqrt_pi[:, None])
    lam = eig.values[1:]
    c = coeffs[1:]
    sigma = (c.T * ((1.0 + lam) / (1.0 - lam))) @ c
    sigma = (sigma + sigma.T) / 2.0
    mu = model.pi @ model.g
    return GroundTruth(sigma=sigma, mu=mu, atom_supports=lam.copy(), atom_coeffs=c.copy())


def simulate_mh(model, m, rng, return_states=False):
    """Length-m chain of g values from a stationary start.

    ``rng`` is an RngStream or a seed (stream id 1 is then used).  The
    initial state is drawn from pi and each transition consumes exactly one
    uniform, so paths are reproducible across kernel backends.
    """
    if m < 2:
        raise ValidationError("need m >= 2")
    if not isinstance(rng, RngStream):
        rng = RngStream(rng, 1)
    cum_pi = np.cumsum(model.pi)
    cum_rows = np.ascontiguousarray(np.cumsum(model.q, axis=1))
    u = rng.draw_uniform(m)
    x0 = min(int(np.searchsorted(cum_pi, u[0], side="right")), model.s - 1)
    states = kernels.mh_path(cum_rows, x0, u[1:])
    chain = Chain(model.g[states])
    return (chain, states) if return_states else chain


# ---------------------------------------------------------------------------
# reversible VAR(1)


@dataclass
class VAR1Model:
    """X_t = A X_{t-1} + eps_t with symmetric A; reversible iff A S_eps is."""

    a: np.ndarray
    sigma_eps: np.ndarray
    v: np.ndarray  # stationary covariance (I - A^2)^{-1} S_eps
    d_rho: np.ndarray | None = None
    off: float | None = None

    @property
    def d(self):
        return self.a.shape[0]

    def to_dict(self, truth=None):
        out = {
            "kind": "var1",
            "a": self.a.tolist(),
            "sigma_eps": self.sigma_eps.tolist(),
            "v": self.v.tolist(),
            "d_rho": None if self.d_rho is None else list(map(float, self.d_rho)),
            "off": self.off,
        }
        if truth is not None:
            out["truth"] = truth.to_dict()
        return out


def build_var1(d_rho, off=0.01, sigma_eps=None):
    """VAR(1) model A = diag(d_rho) + off * (J - I), default unit noise.

    Requires spectral radius below 1 and A @ sigma_eps symmetric (the
    reversibility criterion for Gaussian VAR(1), Osawa 1988).
    """
    d_rho = np.asarray(d_rho, dtype=np.float64)
    d = d_rho.shape[0]
    a = np.diag(d_rho) + off * (np.ones((d, d)) - np.eye(d))
    sigma_eps = np.eye(d) if sigma_eps is None else np.asarray(sigma_eps, dtype=np.float64)
    eig = sym_eigen(a)
    if np.abs(eig.values).max() >= 1.0:
        raise ValidationError("spectral radius of A must be below 1")
    prod = a @ sigma_eps
    if np.abs(prod - prod.T).max() > 1e-12 * max(1.0, np.abs(prod).max()):
        raise ValidationError("A @ sigma_eps must be symmetric (reversibility)")
    v = (eig.vectors / (1.0 - eig.values**2)) @ eig.vectors.T @ sigma_eps
    v = (v + v.T) / 2.0
    return VAR1Model(a=a, sigma_eps=sigma_eps, v=v, d_rho=d_rho, off=float(off))


def var1_preset(name):
    key = VAR1_PRESET_ALIASES.get(str(name).lower(), str(name))
    if key not in VAR1_PRESETS:
        raise ValidationError(f"unknown VAR(1) preset {name!r}")
    return build_var1(VAR1_PRESETS[key])


def var1_ground_truth(model):
    """Closed-form truth for the VAR(1) chain.

    Sigma = 2 (I - A)^{-1} V - V and mu = 0.  When the noise covariance is
    diagonal in A's eigenbasis (always true for unit noise) the lag
    structure gamma(k) = A^|k| V also decomposes into exact atoms at A's
    eigenvalues, which are exported for sequence-level comparisons.
    """
    eig = sym_eigen(model.a)
    inv = (eig.vectors / (1.0 - eig.values)) @ eig.vectors.T
    sigma = 2.0 * inv @ model.v - model.v
    sigma = (sigma + sigma.T) / 2.0
    # atoms exist when U' S_eps U is diagonal (shared eigenbasis)
    w = eig.vectors.T @ model.sigma_eps @ eig.vectors
    off = w - np.diag(np.diag(w))
    if np.abs(off).max() <= 1e-10 * max(1.0, np.abs(w).max()):
        v_eigs = np.diag(w) / (1.0 - eig.values**2)
        coeffs = (eig.vectors * np.sqrt(np.maximum(v_eigs, 0.0))).T
        supports = eig.values.copy()
    else:  # pragma: no cover - not reachable with the shipped presets
        supports = np.empty(0)
        coeffs = np.empty((0, model.d))
    mu = np.zeros(model.d)
    return GroundTruth(sigma=sigma, mu=mu, atom_supports=supports, atom_coeffs=coeffs)


def simulate_var1(model, m, rng):
    """Length-m stationary VAR(1) path.

    Draw order is fixed: d normals for X_0 ~ N(0, V), then an (m-1) x d
    noise block.  The recursion runs componentwise in A's eigenbasis through
    the AR(1) kernel, then rotates back.
    """
    if m < 2:
        raise ValidationError("need m >= 2")
    if not isinstance(rng, RngStream):
        rng = RngStream(rng, 1)
    d = model.d
    eig = sym_eigen(model.a)
    x0 = _spectral_sqrt(model.v) @ rng.draw_normal(d)
    noise = rng.draw_normal((m - 1, d)) @ _spectral_sqrt(model.sigma_eps).T
    w_noise = noise @ eig.vectors
    w0 = eig.vectors.T @ x0
    w_path = np.empty((m, d))
    for j in range(d):
        seq = np.concatenate([[w0[j]], w_noise[:, j]])
        w_path[:, j] = kernels.ar1_filter(float(eig.values[j]), seq)
    return Chain(w_path @ eig.vectors.T)


# ---------------------------------------------------------------------------
# JSON round trip


def save_model_json(path, model, truth=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(truth=truth), fh, indent=1)
        fh.write("\n")


def load_model_json(path):
    """Rebuild a model (and its stored truth, if present) from a JSON file."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("kind")
    truth = None
    if data.get("truth") is not None:
        t = data["truth"]
        truth = GroundTruth(
            sigma=np.asarray(t["sigma"], dtype=np.float64),
            mu=np.asarray(t["mu"], dtype=np.float64),
            atom_supports=np.asarray(t["atom_supports"], dtype=np.float64),
            atom_coeffs=np.asarray(t["atom_coeffs"], dtype=np.float64),
        )
    if kind == "mh":
        model = DiscreteMHModel(
            s=data["s"],
            d=data["d"],
            rho=data["rho"],
            seed=data["seed"],
            pi=np.asarray(data["pi"], dtype=np.float64),
            q=np.asarray(data["q"], dtype=np.float64),
            g=np.asarray(data["g"], dtype=np.float64),
        )
        return model, truth
    if kind == "var1":
        model = VAR1Model(
            a=np.asarray(data["a"], dtype=np.float64),
            sigma_eps=np.asarray(data["sigma_eps"], dtype=np.float64),
            v=np.asarray(data["v"], dtype=np.float64),
            d_rho=None if data.get("d_rho") is None else np.asarray(data["d_rho"]),
            off=data.get("off"),
        )
        return model, truth
    raise ValidationError(f"unknown model kind {kind!r}")
