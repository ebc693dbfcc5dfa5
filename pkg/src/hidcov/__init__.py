"""Distance covariance tests for mutual, banded and joint dependence in high dimensions."""

from .aggregate import (
    BandedTestResult,
    MutualTestResult,
    approx_power_equicorr,
    banded_statistic,
    banded_sweep,
    f_rho,
    mutual_statistic,
    variance_estimator_null,
)
from .distance import (
    dcov_u,
    dcov_u_bruteforce,
    dcov_v,
    dvar_u,
    pairwise_abs_distance,
    u_center,
)
from .errors import (
    DataParseError,
    DegenerateBandwidthError,
    DegenerateStudentizerError,
    HidcovError,
    InvalidInputError,
    SampleSizeError,
)
from .joint import (
    DistanceInducedKernel,
    GaussianKernel,
    JointTestResult,
    dhsic_v,
    distance_induced_kernel,
    mdcov_v,
    median_heuristic_bandwidth,
    permutation_test,
)
from .montecarlo import MCConfig, MCResult, Method, estimate_rejection_rate, null_statistic_sample
from .simgen import RngSeed, ScenarioSpec, cholesky, covariance_matrix, generate

__version__ = "0.1.0"
