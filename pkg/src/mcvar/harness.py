"""Replication benchmark: B chains per length, per-method error and coverage.

Every replicate draws its chain from a stream id derived from (chain length,
replicate index), so results are identical no matter how many workers run or
how the length grid is later extended.  Rows aggregate the relative error
``||S^{-1/2}(Shat - S)S^{-1/2}||_F`` and the empirical coverage of the
level-(1-alpha) confidence region, with standard errors sd/sqrt(n).
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .autocov import Chain
from .baselines import (
    EstimatorConfig,
    batch_means,
    default_batch_size,
    mtv_initial_seq,
    overlapping_batch_means,
    sv_bartlett,
)
from .errors import McvarError, ValidationError
from .multivar import momentls_avar, region_contains, relative_error
from .simulate import (
    GroundTruth,
    build_mh_model,
    mh_ground_truth,
    simulate_mh,
    simulate_var1,
    var1_ground_truth,
    var1_preset,
)
from .numerics import RngStream

RESULT_COLUMNS = (
    "method",
    "M",
    "rel_err_mean",
    "rel_err_se",
    "coverage",
    "coverage_se",
    "fail_count",
    "time_mean_s",
)

# replicate stream ids pack (M, b) into one integer; see _stream_id
_REPLICATE_BITS = 20


def _stream_id(m, b):
    return (int(m) << _REPLICATE_BITS) + int(b)


# ---------------------------------------------------------------------------
# estimator dispatch


def compute_estimate(chain, config, truth=None):
    """Asymptotic variance estimate of ``chain`` under one method config."""
    batch = config.batch
    if config.method in ("sv-bartlett", "bm", "obm") and batch is None:
        batch = default_batch_size(chain.m, chain.d)
    batch_cap = chain.m if config.method == "sv-bartlett" else chain.m - 1
    if batch is not None and not 1 <= batch <= batch_cap:
        raise ValidationError(f"batch/truncation must lie in [1, {batch_cap}]")
    if config.method == "sv-bartlett":
        return sv_bartlett(chain, batch)
    if config.method == "bm":
        return batch_means(chain, batch)
    if config.method == "obm":
        return overlapping_batch_means(chain, batch)
    if config.method == "mtv-init":
        return mtv_initial_seq(chain)
    if config.method == "mtv-mlse":
        est = momentls_avar(chain, n_splits=config.n_splits, s0=config.grid_size)
        return est.matrix
    if config.method == "oracle":
        if truth is None:
            raise ValidationError("the oracle method needs a ground truth")
        return truth.sigma.copy()
    raise ValidationError(f"unknown method {config.method!r}")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class BenchmarkConfig:
    """Benchmark description; see ``from_dict`` for the JSON schema."""

    model: dict
    m_grid: list
    replicates: int
    methods: list
    alpha: float = 0.05
    seed: int = 0
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.replicates < 1:
            raise ValidationError("need at least one replicate")
        if self.replicates >= (1 << _REPLICATE_BITS):
            raise ValidationError(f"replicate count must stay below {1 << _REPLICATE_BITS}")
        if not self.m_grid or any(int(m) < 4 for m in self.m_grid):
            raise ValidationError("every chain length must be at least 4")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if not self.methods:
            raise ValidationError("need at least one method")
        if self.workers < 1:
            raise ValidationError("worker count must be positive")
        if self.model.get("kind") == "csv" and self.replicates != 1:
            raise ValidationError("a csv model provides a single chain; use replicates=1")

    @classmethod
    def from_dict(cls, data):
        methods = []
        for entry in data.get("methods", []):
            if isinstance(entry, str):
                methods.append(EstimatorConfig(method=entry))
            else:
                methods.append(
                    EstimatorConfig(
                        method=entry["method"],
                        batch=entry.get("batch"),
                        n_splits=entry.get("n_splits", 5),
                        grid_size=entry.get("grid_size", 1001),
                    )
                )
        return cls(
            model=data["model"],
            m_grid=[int(m) for m in data["m_grid"]],
            replicates=int(data.get("replicates", 1)),
            methods=methods,
            alpha=float(data.get("alpha", 0.05)),
            seed=int(data.get("seed", 0)),
            workers=int(data.get("workers", 1)),
            timing=bool(data.get("timing", True)),
        )

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read benchmark config {path}: {exc}") from exc
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed benchmark config: {exc}") from exc


def _resolve_model(spec, seed):
    """Build (kind, model, truth) from a model spec dictionary.

    Kinds: {"kind": "var1", "preset": "1"}, {"kind": "mh", "s": .., "d": ..,
    "rho": ..}, or {"kind": "csv", "path": .., "truth": {"sigma": .., "mu": ..}}.
    The returned triple is picklable so it can ship to pool workers.
    """
    kind = spec.get("kind")
    if kind == "var1":
        model = var1_preset(spec.get("preset", "1"))
        truth = var1_ground_truth(model)
    elif kind == "mh":
        model = build_mh_model(
            seed, s=spec.get("s"), d=spec.get("d"), rho=spec.get("rho")
        )
        truth = mh_ground_truth(model)
    elif kind == "csv":
        model = read_chain_csv(spec["path"])
        t = spec.get("truth") or {}
        if "sigma" not in t or "mu" not in t:
            raise ValidationError("csv models need truth.sigma and truth.mu")
        truth = GroundTruth(
            sigma=np.asarray(t["sigma"], dtype=np.float64),
            mu=np.asarray(t["mu"], dtype=np.float64),
            atom_supports=np.empty(0),
            atom_coeffs=np.empty((0, model.d)),
        )
    else:
        raise ValidationError(f"unknown model kind {kind!r}")
    return kind, model, truth


def _simulate_replicate(kind, model, m, rng):
    if kind == "var1":
        return simulate_var1(model, m, rng)
    if kind == "mh":
        return simulate_mh(model, m, rng)
    if m > model.m:
        raise ValidationError(f"chain file has only {model.m} rows, need {m}")
    return Chain(model.values[:m])


# ---------------------------------------------------------------------------
# running


@dataclass
class ResultRow:
    method: str
    m: int
    rel_err_mean: float | None
    rel_err_se: float | None
    coverage: float | None
    coverage_se: float | None
    fail_count: int
    time_mean_s: float | None

    def as_record(self):
        return (
            self.method,
            str(self.m),
            _fmt(self.rel_err_mean),
            _fmt(self.rel_err_se),
            _fmt(self.coverage),
            _fmt(self.coverage_se),
            str(self.fail_count),
            _fmt(self.time_mean_s),
        )


def _fmt(x):
    return "" if x is None else format(x, ".17g")


@dataclass
class BenchmarkResult:
    rows: list
    config: BenchmarkConfig = field(repr=False, default=None)


# worker-process state set up once per pool worker
_WORKER = {}


def _init_worker(payload):
    _WORKER["payload"] = payload


def _replicate_metrics(payload, m, b):
    """All per-method metrics of one replicate chain.

    An estimator exception marks the replicate failed for that method.  An
    estimate that cannot back a valid confidence region (numerically
    singular or indefinite) still contributes its relative error and counts
    as a coverage miss: a broken region covers nothing.
    """
    kind, model, truth, methods, alpha, seed, timing = payload
    rng = RngStream(seed, _stream_id(m, b))
    chain = _simulate_replicate(kind, model, m, rng)
    mu_hat = chain.mean()
    out = []
    for cfg in methods:
        start = time.perf_counter() if timing else 0.0
        try:
            sigma_hat = compute_estimate(chain, cfg, truth=truth)
        except McvarError:
            out.append((None, None, None, True))
            continue
        elapsed = time.perf_counter() - start if timing else None
        rel = relative_error(sigma_hat, truth.sigma)
        try:
            cover = region_contains(mu_hat, sigma_hat, truth.mu, chain.m, alpha)
        except McvarError:
            cover = False
        out.append((rel, 1.0 if cover else 0.0, elapsed, False))
    return out


def _pool_task(args):
    m, b = args
    return m, b, _replicate_metrics(_WORKER["payload"], m, b)


def run_benchmark(config, progress=None):
    """Run the full benchmark described by ``config``.

    Replicates execute independently (optionally on a process pool); the
    aggregation always sums in replicate order, so the output is a pure
    function of the config.  ``progress`` is an optional callable fed
    one-line status strings.
    """
    kind, model, truth = _resolve_model(config.model, config.seed)
    payload = (kind, model, truth, config.methods, config.alpha, config.seed, config.timing)
    per_m = {}
    tasks = [(int(m), b) for m in config.m_grid for b in range(config.replicates)]
    if config.workers > 1:
        with ProcessPoolExecutor(
            max_workers=config.workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            for m, b, metrics in pool.map(_pool_task, tasks, chunksize=4):
                per_m.setdefault(m, {})[b] = metrics
                if progress and b == config.replicates - 1:
                    progress(f"M={m}: finished {config.replicates} replicates")
    else:
        for m, b in tasks:
            per_m.setdefault(m, {})[b] = _replicate_metrics(payload, m, b)
            if progress and b == config.replicates - 1:
                progress(f"M={m}: finished {config.replicates} replicates")

    rows = []
    for method_idx, cfg in enumerate(config.methods):
        for m in config.m_grid:
            m = int(m)
            metrics = [per_m[m][b][method_idx] for b in range(config.replicates)]
            rels = np.array([r for r, _, _, failed in metrics if not failed])
            covs = np.array([c for _, c, _, failed in metrics if not failed])
            times = [t for _, _, t, failed in metrics if not failed and t is not None]
            fails = sum(1 for *_, failed in metrics if failed)
            rows.append(
                ResultRow(
                    method=cfg.method,
                    m=m,
                    rel_err_mean=_mean_or_none(rels),
                    rel_err_se=_se_or_none(rels),
                    coverage=_mean_or_none(covs),
                    coverage_se=_se_or_none(covs),
                    fail_count=fails,
                    time_mean_s=(sum(times) / len(times)) if times else None,
                )
            )
    return BenchmarkResult(rows=rows, config=config)


def _mean_or_none(values):
    return float(np.mean(values)) if values.size else None


def _se_or_none(values):
    if values.size < 2:
        return None
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


# ---------------------------------------------------------------------------
# CSV interfaces


def write_results_csv(result, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in result.rows:
            writer.writerow(row.as_record())


def write_chain_csv(chain, path):
    """Chain file: header g1..gd, then one row of floats per iterate."""
    chain = chain if isinstance(chain, Chain) else Chain(np.asarray(chain))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(f"g{i + 1}" for i in range(chain.d)) + "\n")
        for row in chain.values:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def read_chain_csv(path):
    """Parse a chain file, rejecting malformed rows with their line number."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot open chain file {path}: {exc}") from exc
    with fh:
        header = fh.readline().strip()
        columns = [c.strip() for c in header.split(",")] if header else []
        if not columns or columns != [f"g{i + 1}" for i in range(len(columns))]:
            raise ValidationError(
                f"{path}: line 1: expected a header g1,...,gd, got {header!r}"
            )
        d = len(columns)
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != d:
                raise ValidationError(
                    f"{path}: line {lineno}: expected {d} columns, found {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc}") from exc
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least 2 data rows")
    return Chain(np.asarray(rows))
