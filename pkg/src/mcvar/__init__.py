"""mcvar: asymptotic variance estimation for multivariate MCMC output.

Estimates auto/cross-covariance sequences and the asymptotic variance
matrix of Markov chain sample means.  The headline estimator projects
empirical autocovariances onto a cone of moment sequences (momentLS) and
assembles the matrix element-wise with an eigenvalue refinement that
guarantees positive semi-definiteness; spectral-window, batch-means and
initial-sequence estimators are included for comparison, together with
simulators that have closed-form ground truth and a replication benchmark
harness.
"""

__version__ = "0.1.0"

from .autocov import (
    Chain,
    LagMatrixSequence,
    LagSequence,
    combine_components,
    empirical_autocov,
    empirical_autocov_matrix,
)
from .baselines import (
    EstimatorConfig,
    batch_means,
    default_batch_size,
    mtv_initial_seq,
    overlapping_batch_means,
    sv_bartlett,
)
from .errors import (
    ConvergenceError,
    DegenerateChainError,
    McvarError,
    NumericalError,
    ValidationError,
)
from .harness import (
    BenchmarkConfig,
    BenchmarkResult,
    compute_estimate,
    read_chain_csv,
    run_benchmark,
    write_chain_csv,
    write_results_csv,
)
from .momentls import (
    DeltaEstimate,
    MomentMeasure,
    SupportGrid,
    avar_from_measure,
    build_grid,
    direct_grid,
    eval_sequence,
    project_momentls,
    signed_l2_distance,
    tune_delta,
)
from .multivar import (
    AvarMatrix,
    DeltaVector,
    SignedMomentPair,
    estimate_cross_cov,
    momentls_avar,
    region_contains,
    relative_error,
    sigma_psd,
    sigma_pw,
    tune_delta_vector,
)
from .numerics import (
    EigenDecomposition,
    RngStream,
    chi2_quantile,
    nnls_qp,
    rng_stream,
    sym_eigen,
)
from .simulate import (
    DiscreteMHModel,
    GroundTruth,
    VAR1Model,
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
