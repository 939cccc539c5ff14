"""Sliding-window multiple likelihood-ratio testing for burst detection.

The core library lives in this package; :mod:`burstlr.service` wraps it
in a FastAPI application, and :mod:`burstlr.cli` is a thin command-line
client of that service.
"""

from .binning import BinnedDataset, TimedObservation, bin_observations, shift_origin
from .decision import (
    CalibrationResult,
    DecisionConfig,
    DecisionReport,
    calibrate_alpha,
    reject_new,
    reject_standard,
    type1_new,
    type1_standard,
)
from .errors import (
    BurstLrError,
    CalibrationError,
    ConvergenceError,
    DegenerateDataError,
    DomainError,
    InvariantViolationError,
    NumericalError,
    SingularWindowError,
    SupportError,
)
from .families import (
    FAMILIES,
    Family,
    NullSpec,
    check_regularity,
    fisher_information,
    log_likelihood,
    make_family,
    mle_full,
    mle_restricted,
    score,
)
from .limitlaw import (
    CorrelationMatrix,
    LimitSampleBatch,
    RejectionEstimate,
    correlation_matrix,
    rejection_probability,
    sample_chi2_limit,
    sample_chi2_limit_oracle,
    sample_mle_limit,
)
from .lrstats import LrVector, WindowIndexing, lambda_new, lambda_standard, xi_from_lambda
from .simharness import (
    BurstSpec,
    PowerTable,
    ScenarioSpec,
    generate_burst,
    generate_h0,
    power_comparison,
    validate_theorem1,
    validate_theorem2,
    validate_theorems,
)

__version__ = "0.1.0"
