"""Transient age-of-information distributions for Gaussian-process delay
models: exact joint-tail evaluation, Monte-Carlo cross-validation,
moment calibration, stochastic-order checks, and figure-data export."""

__version__ = "1.0.0"

from .core import (
    AoiSupport,
    CcdfGrid,
    GenerationSchedule,
    JointTailOracle,
    TimeDecomposition,
    aoi_ccdf,
    aoi_path,
    aoi_path_matrix,
    aoi_support,
    decompose_time,
    point_mass_oracle,
    theta,
)
from .errors import AoiLabError, CalibrationError, EvaluationError, QuadratureError
from .links import (
    CENSORED_NORMAL,
    SHIFTED_LOGNORMAL,
    CalibrationTarget,
    CorrelationMode,
    DelayModel,
    LinkFunction,
    build_model,
    calibrate_kappa,
    calibrate_marginal,
    g_apply,
    g_inverse,
    lag_covariance,
    marginal_moments,
    ou_transition,
    thresholds,
)
from .orthant import (
    ConditionalTail,
    CovarianceSpec,
    OuChain,
    QuadratureSpec,
    mvn_orthant_mc,
    orthant_frozen,
    orthant_iid,
    ou_covariance,
    ou_orthant,
    std_normal_tail,
)
from .outputs import (
    DEFAULT_LEVELS,
    DominanceReport,
    HeatmapGrid,
    PercentileRow,
    TimeAverageEvaluator,
    ccdf_profile,
    dominance_check,
    exact_ccdf_grid,
    exact_oracle,
    heatmap,
    percentiles,
    time_averaged_ccdf,
    write_ccdf_csv,
    write_heatmap_csv,
    write_meta_json,
    write_percentiles_csv,
    write_timeavg_csv,
)
from .simulate import (
    EmpiricalCcdf,
    SimConfig,
    sample_delay_paths,
    sample_driver,
    sample_ou_on_grid,
    simulate_aoi_paths,
    simulate_empirical_ccdf,
)

__all__ = [
    "__version__",
    # core
    "AoiSupport",
    "CcdfGrid",
    "GenerationSchedule",
    "JointTailOracle",
    "TimeDecomposition",
    "aoi_ccdf",
    "aoi_path",
    "aoi_path_matrix",
    "aoi_support",
    "decompose_time",
    "point_mass_oracle",
    "theta",
    # errors
    "AoiLabError",
    "CalibrationError",
    "EvaluationError",
    "QuadratureError",
    # links
    "CENSORED_NORMAL",
    "SHIFTED_LOGNORMAL",
    "CalibrationTarget",
    "CorrelationMode",
    "DelayModel",
    "LinkFunction",
    "build_model",
    "calibrate_kappa",
    "calibrate_marginal",
    "g_apply",
    "g_inverse",
    "lag_covariance",
    "marginal_moments",
    "ou_transition",
    "thresholds",
    # orthant
    "ConditionalTail",
    "CovarianceSpec",
    "OuChain",
    "QuadratureSpec",
    "mvn_orthant_mc",
    "orthant_frozen",
    "orthant_iid",
    "ou_covariance",
    "ou_orthant",
    "std_normal_tail",
    # outputs
    "DEFAULT_LEVELS",
    "DominanceReport",
    "HeatmapGrid",
    "PercentileRow",
    "TimeAverageEvaluator",
    "ccdf_profile",
    "dominance_check",
    "exact_ccdf_grid",
    "exact_oracle",
    "heatmap",
    "percentiles",
    "time_averaged_ccdf",
    "write_ccdf_csv",
    "write_heatmap_csv",
    "write_meta_json",
    "write_percentiles_csv",
    "write_timeavg_csv",
    # simulate
    "EmpiricalCcdf",
    "SimConfig",
    "sample_delay_paths",
    "sample_driver",
    "sample_ou_on_grid",
    "simulate_aoi_paths",
    "simulate_empirical_ccdf",
]
