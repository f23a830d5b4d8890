"""Outlier detection through projections maximizing the empirical CGF.

The pipeline: center the data, pick a projection radius from the
relative-variance rule, find directions maximizing the empirical cumulant
generating function by multistart projected gradient ascent, then score each
observation's projection by its MAD-normalized deviation and flag scores
above a threshold beta. ROC utilities sweep beta and report AUC / BCV, and
the distributions module regenerates the synthetic experiment families
(normal, skew-normal, Student-t) with planted outlier blocks.
"""

__version__ = "0.1.0"

from .linalg_stats import (
    CovarianceSummary,
    DataMatrix,
    DegenerateInputError,
    center,
    covariance_pca,
    first_four_cumulants,
    kurtosis,
    median_and_mad,
)
from .cgf import (
    ConvergenceError,
    MaximizerResult,
    MultistartConfig,
    RadiusSelection,
    cgf_estimate,
    cgf_gradient,
    maximize_cgf,
    refine_direction,
    relative_variance,
    sample_unit_sphere,
    select_radius,
    unit_vector,
)
from .distributions import (
    FAMILIES,
    LabeledDataset,
    SimulationSpec,
    SkewNormalParams,
    cgf_skew_normal_analytic,
    default_covariance,
    inject_outliers,
    sample_normal,
    sample_skew_normal,
    sample_student_t,
)
from .detector import (
    DegenerateProjectionError,
    DetectionError,
    DetectionMethod,
    DetectionReport,
    DetectorConfig,
    DirectionTrace,
    detect,
    q_scores,
)
from .evaluation import (
    RocCurve,
    RocPoint,
    assemble_curve,
    confusion_rates,
    default_beta_grid,
    roc_sweep,
)
from .io import (
    PriceTable,
    compute_returns,
    jsonify,
    label_by_crisis,
    read_data_csv,
    read_labels_csv,
    read_price_csv,
    write_data_csv,
    write_json,
    write_labels_csv,
    write_roc_csv,
)
from .cli import main, run_cli

__all__ = [
    "__version__",
    # linalg_stats
    "CovarianceSummary",
    "DataMatrix",
    "DegenerateInputError",
    "center",
    "covariance_pca",
    "first_four_cumulants",
    "kurtosis",
    "median_and_mad",
    # cgf
    "ConvergenceError",
    "MaximizerResult",
    "MultistartConfig",
    "RadiusSelection",
    "cgf_estimate",
    "cgf_gradient",
    "maximize_cgf",
    "refine_direction",
    "relative_variance",
    "sample_unit_sphere",
    "select_radius",
    "unit_vector",
    # distributions
    "FAMILIES",
    "LabeledDataset",
    "SimulationSpec",
    "SkewNormalParams",
    "cgf_skew_normal_analytic",
    "default_covariance",
    "inject_outliers",
    "sample_normal",
    "sample_skew_normal",
    "sample_student_t",
    # detector
    "DegenerateProjectionError",
    "DetectionError",
    "DetectionMethod",
    "DetectionReport",
    "DetectorConfig",
    "DirectionTrace",
    "detect",
    "q_scores",
    # evaluation
    "RocCurve",
    "RocPoint",
    "assemble_curve",
    "confusion_rates",
    "default_beta_grid",
    "roc_sweep",
    # io
    "PriceTable",
    "compute_returns",
    "jsonify",
    "label_by_crisis",
    "read_data_csv",
    "read_labels_csv",
    "read_price_csv",
    "write_data_csv",
    "write_json",
    "write_labels_csv",
    "write_roc_csv",
    # cli
    "main",
    "run_cli",
]
