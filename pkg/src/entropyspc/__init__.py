"""Control charts for simple linear profiles.

Two coefficient estimators (least squares and maximum entropy), Hotelling T2
monitoring with F-based and empirical-quantile control limits, and a
Monte-Carlo run-length engine. See the README for the CLI.
"""

from .arl import (
    ArlReport,
    ArlRow,
    ShiftModel,
    ShiftScenario,
    TrueModel,
    arl_table,
    estimate_beta,
    simulate_phase1,
)
from .estimators import (
    CoefficientVector,
    Method,
    ProfileCoefficients,
    coefficient_matrix,
    fit_all,
    lr_fit,
    me_fit,
    me_fit_sample,
)
from .exceptions import (
    BaselineMismatchError,
    DegenerateDesignError,
    DivergentIntegralError,
    EmptyDatasetError,
    EmptyInputError,
    EntropySpcError,
    InconsistentDesignError,
    InfeasibleError,
    InvalidDofError,
    MalformedCsvError,
    NoConvergenceError,
    QuadratureError,
    SingularCovarianceError,
    TooFewSamplesError,
    UnknownSampleError,
    ZeroVarianceError,
)
from .maxent import (
    ConstraintPreset,
    ConstraintSet,
    DensityMoments,
    MaxEntDensity,
    SupportRegion,
    default_support,
    density_moments,
    from_multipliers,
    gaussian_multipliers,
    moment_residuals,
    shannon_entropy,
    solve_maxent,
)
from .monitoring import (
    ChartPoint,
    ControlLimitSet,
    CovEstimator,
    HotellingBaseline,
    ProfileT2Chart,
    build_baseline,
    control_limits,
    evaluate_chart,
    fisher_ucl,
    phase1_t2,
    quantile_ucl,
    t2_statistic,
)
from .profiles import (
    DesignVector,
    Phase,
    ProfileDataset,
    ProfileSample,
    SampleMoments,
    load_dataset,
    sample_moments,
    write_dataset,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
