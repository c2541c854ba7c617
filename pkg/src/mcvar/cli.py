"""Command-line interface.

Subcommands: ``simulate`` (write a chain CSV plus a model/truth JSON
sidecar), ``estimate`` (asymptotic variance of a chain file by any method),
``truth`` (print a preset's exact ground truth), ``benchmark`` (run a
config-driven replication study).  stdout carries machine-readable payloads
only; progress and diagnostics go to stderr.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, kernels
from .baselines import EstimatorConfig, METHOD_NAMES
from .errors import NumericalError, ValidationError
from .harness import (
    BenchmarkConfig,
    compute_estimate,
    read_chain_csv,
    run_benchmark,
    write_chain_csv,
    write_results_csv,
)
from .multivar import momentls_avar
from .numerics import RngStream
from .simulate import (
    MH_DEFAULTS,
    build_mh_model,
    mh_ground_truth,
    save_model_json,
    simulate_mh,
    simulate_var1,
    var1_ground_truth,
    var1_preset,
)

USAGE_ERROR, DATA_ERROR, NUMERICAL_ERROR = 1, 2, 3

# chain paths use stream id 1; model construction uses id 0
CHAIN_STREAM = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract is 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _json_dump(payload, path=None):
    text = json.dumps(payload, indent=1)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _build_parser():
    parser = _Parser(prog="mcvar", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version",
        action="version",
        version=f"mcvar {__version__} (kernels: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a chain with known truth")
    p_sim.add_argument("--model", choices=["mh", "var1"], required=True)
    p_sim.add_argument("--preset", default="1", help="var1: 1|mixed or 2|positive; mh: default")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--length", type=int, required=True)
    p_sim.add_argument("--out", required=True, help="chain CSV path")
    p_sim.add_argument("--model-out", default=None, help="sidecar JSON path (default <out>.model.json)")

    p_est = sub.add_parser("estimate", help="estimate the asymptotic variance of a chain file")
    p_est.add_argument("chain_csv")
    p_est.add_argument("--method", required=True)
    p_est.add_argument("--delta-L", type=int, default=5, dest="delta_l", help="splits for delta tuning")
    p_est.add_argument("--grid-size", type=int, default=1001)
    p_est.add_argument("--batch-size", type=int, default=None)
    p_est.add_argument("--alpha", type=float, default=0.05)
    p_est.add_argument("--json-out", default=None)

    p_truth = sub.add_parser("truth", help="print a preset's exact asymptotic variance")
    p_truth.add_argument("--model", choices=["mh", "var1"], required=True)
    p_truth.add_argument("--preset", default="1")
    p_truth.add_argument("--seed", type=int, default=0)

    p_bench = sub.add_parser("benchmark", help="run a replication benchmark from a JSON config")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--workers", type=int, default=None, help="override the config worker count")
    return parser


def _cmd_simulate(args):
    if args.length < 2:
        raise ValidationError("--length must be at least 2")
    rng = RngStream(args.seed, CHAIN_STREAM)
    if args.model == "var1":
        model = var1_preset(args.preset)
        truth = var1_ground_truth(model)
        chain = simulate_var1(model, args.length, rng)
    else:
        if args.preset not in ("default", "1"):
            raise ValidationError(f"unknown mh preset {args.preset!r}")
        model = build_mh_model(args.seed, **MH_DEFAULTS)
        truth = mh_ground_truth(model)
        chain = simulate_mh(model, args.length, rng)
    write_chain_csv(chain, args.out)
    sidecar = args.model_out or (args.out + ".model.json")
    save_model_json(sidecar, model, truth=truth)
    print(json.dumps({"chain": args.out, "model": sidecar, "M": chain.m, "d": chain.d}))
    return 0


def _cmd_estimate(args, parser):
    method = args.method.lower()
    if method not in METHOD_NAMES or method == "oracle":
        parser.error(f"--method must be one of {[m for m in METHOD_NAMES if m != 'oracle']}")
    if args.batch_size is not None and args.batch_size < 1:
        parser.error("--batch-size must be a positive integer")
    if not 0.0 < args.alpha < 1.0:
        parser.error("--alpha must lie in (0, 1)")
    if args.delta_l < 1:
        parser.error("--delta-L must be at least 1")
    chain = read_chain_csv(args.chain_csv)
    config = EstimatorConfig(
        method=method, batch=args.batch_size, n_splits=args.delta_l, grid_size=args.grid_size
    )
    payload = {"method": method, "d": chain.d, "M": chain.m, "alpha": args.alpha}
    if method == "mtv-mlse":
        est = momentls_avar(chain, n_splits=args.delta_l, s0=args.grid_size)
        sigma = est.matrix
        payload["delta"] = [float(x) for x in est.deltas]
        payload["refined"] = bool(est.refined)
    else:
        sigma = compute_estimate(chain, config)
        if method in ("sv-bartlett", "bm", "obm"):
            from .baselines import default_batch_size

            payload["batch_size"] = (
                args.batch_size if args.batch_size is not None else default_batch_size(chain.m)
            )
    payload["sigma"] = [[float(x) for x in row] for row in np.asarray(sigma)]
    payload["diag"] = [float(x) for x in np.diag(sigma)]
    _json_dump(payload, args.json_out)
    return 0


def _cmd_truth(args):
    if args.model == "var1":
        model = var1_preset(args.preset)
        truth = var1_ground_truth(model)
    else:
        if args.preset not in ("default", "1"):
            raise ValidationError(f"unknown mh preset {args.preset!r}")
        model = build_mh_model(args.seed, **MH_DEFAULTS)
        truth = mh_ground_truth(model)
    _json_dump(
        {
            "model": args.model,
            "preset": args.preset,
            "sigma": truth.sigma.tolist(),
            "mu": truth.mu.tolist(),
        }
    )
    return 0


def _cmd_benchmark(args):
    config = BenchmarkConfig.from_json(args.config)
    if args.workers is not None:
        if args.workers < 1:
            raise ValidationError("--workers must be positive")
        config.workers = args.workers
    result = run_benchmark(config, progress=lambda msg: print(msg, file=sys.stderr))
    write_results_csv(result, args.out)
    print(json.dumps({"results": args.out, "rows": len(result.rows)}))
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "estimate":
            return _cmd_estimate(args, parser)
        if args.command == "truth":
            return _cmd_truth(args)
        if args.command == "benchmark":
            return _cmd_benchmark(args)
        parser.error(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"mcvar: {exc}", file=sys.stderr)
        return DATA_ERROR
    except NumericalError as exc:
        print(f"mcvar: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
