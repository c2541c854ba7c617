"""Benchmark harness: CSV round trips, determinism, isolation, calibration."""

import filecmp

import numpy as np
import pytest

from mcvar.autocov import Chain
from mcvar.baselines import EstimatorConfig
from mcvar.errors import NumericalError, ValidationError
from mcvar.harness import (
    BenchmarkConfig,
    compute_estimate,
    read_chain_csv,
    run_benchmark,
    write_chain_csv,
    write_results_csv,
)

SMOKE = {
    "model": {"kind": "var1", "preset": "1"},
    "m_grid": [2000],
    "replicates": 5,
    "methods": ["sv-bartlett", "bm", "obm", "mtv-init", "mtv-mlse"],
    "alpha": 0.05,
    "seed": 99,
    "workers": 1,
    "timing": False,
}


def test_chain_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    chain = Chain(rng.standard_normal((100, 3)) * 1e3)
    path = tmp_path / "chain.csv"
    write_chain_csv(chain, path)
    back = read_chain_csv(path)
    assert np.array_equal(back.values, chain.values)  # 17 digits round-trip
    assert back.d == 3


def test_chain_csv_ragged_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("g1,g2\n1.0,2.0,3.0\n4.0,5.0\n")
    with pytest.raises(ValidationError, match="line 2"):
        read_chain_csv(path)


def test_chain_csv_non_numeric_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("g1\n1.0\nbanana\n")
    with pytest.raises(ValidationError, match="line 3"):
        read_chain_csv(path)


def test_chain_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1.0,2.0\n3.0,4.0\n")
    with pytest.raises(ValidationError, match="line 1"):
        read_chain_csv(path)


def test_chain_csv_needs_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("g1\n1.0\n")
    with pytest.raises(ValidationError, match="at least 2"):
        read_chain_csv(path)


def test_chain_csv_dimension_inferred(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text("g1,g2\n1.0,2.0\n3.0,4.0\n")
    assert read_chain_csv(path).d == 2


def test_config_validation():
    with pytest.raises(ValidationError):
        BenchmarkConfig.from_dict({**SMOKE, "replicates": 0})
    with pytest.raises(ValidationError):
        BenchmarkConfig.from_dict({**SMOKE, "m_grid": [2]})
    with pytest.raises(ValidationError):
        BenchmarkConfig.from_dict({**SMOKE, "alpha": 1.5})
    with pytest.raises(ValidationError):
        BenchmarkConfig.from_dict({**SMOKE, "methods": []})


def test_benchmark_rows_and_determinism(tmp_path):
    config = BenchmarkConfig.from_dict(SMOKE)
    result = run_benchmark(config)
    assert len(result.rows) == len(SMOKE["methods"]) * len(SMOKE["m_grid"])
    p1 = tmp_path / "r1.csv"
    p2 = tmp_path / "r2.csv"
    write_results_csv(result, p1)
    write_results_csv(run_benchmark(BenchmarkConfig.from_dict(SMOKE)), p2)
    assert filecmp.cmp(p1, p2, shallow=False)


def test_benchmark_worker_count_invariance(tmp_path):
    base = BenchmarkConfig.from_dict(SMOKE)
    multi = BenchmarkConfig.from_dict({**SMOKE, "workers": 2})
    p1 = tmp_path / "w1.csv"
    p2 = tmp_path / "w2.csv"
    write_results_csv(run_benchmark(base), p1)
    write_results_csv(run_benchmark(multi), p2)
    assert filecmp.cmp(p1, p2, shallow=False)


def test_oracle_method_calibration():
    config = BenchmarkConfig.from_dict(
        {
            "model": {"kind": "var1", "preset": "2"},
            "m_grid": [3000],
            "replicates": 200,
            "methods": ["oracle"],
            "alpha": 0.05,
            "seed": 4,
            "timing": False,
        }
    )
    row = run_benchmark(config).rows[0]
    assert row.rel_err_mean == 0.0
    tol = 3.0 * np.sqrt(0.05 * 0.95 / 200)
    assert abs(row.coverage - 0.95) <= tol


def test_single_replicate_drops_se():
    config = BenchmarkConfig.from_dict({**SMOKE, "replicates": 1, "methods": ["bm"]})
    row = run_benchmark(config).rows[0]
    assert row.rel_err_se is None
    assert row.coverage_se is None


def test_failing_estimator_is_isolated(monkeypatch):
    import mcvar.harness as harness

    calls = {"n": 0}
    original = harness.compute_estimate

    def flaky(chain, cfg, truth=None):
        if cfg.method == "bm":
            calls["n"] += 1
            if calls["n"] % 2 == 0:
                raise NumericalError("injected failure")
        return original(chain, cfg, truth=truth)

    monkeypatch.setattr(harness, "compute_estimate", flaky)
    config = BenchmarkConfig.from_dict({**SMOKE, "methods": ["bm", "obm"], "replicates": 4})
    rows = {row.method: row for row in run_benchmark(config).rows}
    assert rows["bm"].fail_count == 2
    assert rows["obm"].fail_count == 0
    assert rows["obm"].rel_err_mean is not None


def test_csv_model_single_chain(tmp_path):
    rng = np.random.default_rng(1)
    chain = Chain(rng.standard_normal((500, 2)))
    path = tmp_path / "c.csv"
    write_chain_csv(chain, path)
    config = BenchmarkConfig.from_dict(
        {
            "model": {
                "kind": "csv",
                "path": str(path),
                "truth": {"sigma": np.eye(2).tolist(), "mu": [0.0, 0.0]},
            },
            "m_grid": [500],
            "replicates": 1,
            "methods": ["bm"],
            "seed": 0,
            "timing": False,
        }
    )
    row = run_benchmark(config).rows[0]
    assert row.rel_err_mean is not None


def test_compute_estimate_rejects_bad_batch():
    rng = np.random.default_rng(2)
    chain = Chain(rng.standard_normal((40, 2)))
    with pytest.raises(ValidationError):
        compute_estimate(chain, EstimatorConfig(method="bm", batch=40))
    with pytest.raises(ValidationError):
        compute_estimate(chain, EstimatorConfig(method="oracle"))
