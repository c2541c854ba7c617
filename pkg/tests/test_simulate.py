"""Simulators: reversibility, exact ground truths, determinism, moments."""

import numpy as np
import pytest

from mcvar.errors import ValidationError
from mcvar.numerics import RngStream, sym_eigen
from mcvar.simulate import (
    DiscreteMHModel,
    build_mh_model,
    build_var1,
    load_model_json,
    mh_ground_truth,
    save_model_json,
    simulate_mh,
    simulate_var1,
    var1_ground_truth,
    var1_preset,
)

# ---------------------------------------------------------------------------
# discrete MH


def test_mh_model_detailed_balance_and_rows():
    for seed in (0, 1, 2, 3, 4):
        model = build_mh_model(seed, s=30, d=2)
        flux = model.pi[:, None] * model.q
        assert np.abs(flux - flux.T).max() <= 1e-12
        assert np.abs(model.q.sum(axis=1) - 1.0).max() <= 1e-12
        assert np.all(model.q >= 0.0)


def test_mh_model_deterministic():
    a = build_mh_model(7)
    b = build_mh_model(7)
    assert np.array_equal(a.q, b.q)
    assert np.array_equal(a.g, b.g)
    assert np.array_equal(a.pi, b.pi)


def _two_state_model(p, q, g_values):
    # hand-built kernel [[1-p, p], [q, 1-q]] with stationary (q, p)/(p+q)
    pi = np.array([q, p]) / (p + q)
    kernel = np.array([[1.0 - p, p], [q, 1.0 - q]])
    return DiscreteMHModel(
        s=2, d=1, rho=0.0, seed=0, pi=pi, q=kernel, g=np.asarray(g_values, float).reshape(2, 1)
    )


def test_mh_truth_two_state_iid():
    model = _two_state_model(0.5, 0.5, [0.0, 1.0])
    truth = mh_ground_truth(model)
    assert truth.sigma[0, 0] == pytest.approx(0.25, abs=1e-12)
    assert truth.atom_supports == pytest.approx([0.0], abs=1e-12)


def test_mh_truth_two_state_hand():
    # p=0.2, q=0.3: pi=(0.6, 0.4), lambda_2 = 0.5, Var = 0.24, Sigma = 0.72
    model = _two_state_model(0.2, 0.3, [0.0, 1.0])
    truth = mh_ground_truth(model)
    assert truth.mu[0] == pytest.approx(0.4)
    assert truth.atom_supports == pytest.approx([0.5], abs=1e-12)
    assert truth.sigma[0, 0] == pytest.approx(0.72, abs=1e-12)


def test_mh_truth_atoms_reproduce_moments():
    model = build_mh_model(11, s=25, d=3)
    truth = mh_ground_truth(model)
    # lag 0: atoms must reproduce Var_pi(g)
    gc = model.g - model.pi @ model.g
    lag0 = gc.T @ (model.pi[:, None] * gc)
    atoms0 = truth.atom_coeffs.T @ truth.atom_coeffs
    assert np.abs(lag0 - atoms0).max() <= 1e-10
    # lag 1: atoms vs direct kernel computation
    lag1 = gc.T @ (model.pi[:, None] * model.q) @ gc
    atoms1 = (truth.atom_coeffs.T * truth.atom_supports) @ truth.atom_coeffs
    assert np.abs(lag1 - atoms1).max() <= 1e-10
    # sigma field equals the sum over atoms
    lam = truth.atom_supports
    recomputed = (truth.atom_coeffs.T * ((1 + lam) / (1 - lam))) @ truth.atom_coeffs
    assert np.abs(truth.sigma - (recomputed + recomputed.T) / 2).max() <= 1e-12


def test_mh_simulation_deterministic():
    model = build_mh_model(3, s=20, d=2)
    a = simulate_mh(model, 500, RngStream(5, 9))
    b = simulate_mh(model, 500, RngStream(5, 9))
    assert np.array_equal(a.values, b.values)


def test_mh_state_frequencies_match_pi():
    model = build_mh_model(13, s=8, d=1)
    _, states = simulate_mh(model, 200_000, RngStream(13, 1), return_states=True)
    freq = np.bincount(states, minlength=8) / len(states)
    assert np.abs(freq - model.pi).max() < 0.01


def test_mh_transition_frequencies_match_kernel():
    model = build_mh_model(29, s=5, d=1)
    _, states = simulate_mh(model, 500_000, RngStream(29, 2), return_states=True)
    counts = np.zeros((5, 5))
    np.add.at(counts, (states[:-1], states[1:]), 1.0)
    rows = counts / counts.sum(axis=1, keepdims=True)
    assert np.abs(rows - model.q).max() < 0.02


# ---------------------------------------------------------------------------
# VAR(1)


def test_var1_iid_case():
    model = build_var1(np.zeros(3), off=0.0)
    assert np.array_equal(model.v, np.eye(3))
    truth = var1_ground_truth(model)
    assert truth.sigma == pytest.approx(np.eye(3), abs=1e-12)


def test_var1_scalar_closed_form():
    model = build_var1(np.array([0.5]), off=0.0)
    assert model.v[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-12)
    truth = var1_ground_truth(model)
    assert truth.sigma[0, 0] == pytest.approx(4.0, rel=1e-12)


def test_var1_presets_stable_and_reversible():
    for name in ("1", "2", "mixed", "positive"):
        model = var1_preset(name)
        vals = sym_eigen(model.a).values
        assert np.abs(vals).max() < 1.0
        prod = model.a @ model.sigma_eps
        assert np.abs(prod - prod.T).max() <= 1e-12


def test_var1_truth_matches_truncated_series():
    for name in ("1", "2"):
        model = var1_preset(name)
        truth = var1_ground_truth(model)
        acc = model.v.copy()
        power = np.eye(model.d)
        for _ in range(500):
            power = power @ model.a
            term = power @ model.v
            acc += term + term.T
        assert np.abs(truth.sigma - acc).max() <= 1e-10 * np.abs(acc).max()


def test_var1_truth_atoms_reproduce_lags():
    model = var1_preset("1")
    truth = var1_ground_truth(model)
    assert truth.atom_supports.size == model.d
    gamma0 = truth.atom_coeffs.T @ truth.atom_coeffs
    assert np.abs(gamma0 - model.v).max() <= 1e-10
    gamma1 = (truth.atom_coeffs.T * truth.atom_supports) @ truth.atom_coeffs
    assert np.abs(gamma1 - model.a @ model.v).max() <= 1e-10


def test_var1_rejects_unstable_or_irreversible():
    with pytest.raises(ValidationError):
        build_var1(np.array([1.1, 0.2]))
    with pytest.raises(ValidationError):
        build_var1(np.array([0.5, 0.2]), sigma_eps=np.array([[1.0, 0.0], [0.0, 2.0]]))


def test_var1_simulation_deterministic():
    model = var1_preset("1")
    a = simulate_var1(model, 400, RngStream(1, 2))
    b = simulate_var1(model, 400, RngStream(1, 2))
    assert np.array_equal(a.values, b.values)


def test_var1_empirical_moments():
    model = var1_preset("1")
    chain = simulate_var1(model, 500_000, RngStream(17, 0))
    yc = chain.values - chain.values.mean(axis=0)
    lag0 = yc[:-1].T @ yc[:-1] / (chain.m - 1)
    assert np.abs(lag0 - model.v).max() < 0.05
    lag1 = yc[:-1].T @ yc[1:] / (chain.m - 1)
    assert np.abs(lag1 - model.a @ model.v).max() < 0.05


def test_var1_stationary_mean():
    model = var1_preset("2")
    truth = var1_ground_truth(model)
    reps, m = 50, 20000
    means = np.array(
        [simulate_var1(model, m, RngStream(23, b)).mean() for b in range(reps)]
    )
    bound = 3.0 * np.sqrt(np.trace(truth.sigma) / (m * reps))
    assert np.abs(means.mean(axis=0)).max() < bound


# ---------------------------------------------------------------------------
# serialization


def test_model_json_round_trip(tmp_path):
    model = build_mh_model(5, s=12, d=2)
    truth = mh_ground_truth(model)
    path = tmp_path / "model.json"
    save_model_json(path, model, truth=truth)
    loaded, loaded_truth = load_model_json(path)
    assert np.abs(loaded.q - model.q).max() == 0.0
    assert np.abs(loaded_truth.sigma - truth.sigma).max() == 0.0
    loaded.validate()  # detailed balance survives the round trip

    var1 = var1_preset("1")
    path2 = tmp_path / "var1.json"
    save_model_json(path2, var1, truth=var1_ground_truth(var1))
    loaded2, truth2 = load_model_json(path2)
    assert np.abs(loaded2.a - var1.a).max() == 0.0
    assert truth2 is not None
