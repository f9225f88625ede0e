"""Simultaneous conformal prediction bands for grid-sampled functional data.

The package fits distribution-free prediction bands for curves observed on a
shared uniform grid, using split conformal calibration of modulated supremum
scores.  Bands come with finite-sample coverage guarantees (exact ones in the
randomized variant), support flat, standard-deviation and trimmed-envelope
width profiles, and can be compared through their area.  A Monte Carlo
harness verifies the coverage laws and efficiency orderings by simulation,
and a CLI ties fitting, simulation and comparison together.
"""

from funcbands.exceptions import (
    CurveFormatError,
    DegenerateStatisticsError,
    FuncbandsError,
    GridMismatchError,
)
from funcbands.grids import (
    Curve,
    FunctionalSample,
    Grid,
    check_same_grid,
    integrate,
    make_uniform_grid,
    mean_curve,
    std_curve,
    sup_abs_diff,
)
from funcbands.modulation import (
    ModulationCurve,
    TrimmedIndexSet,
    adjust_positive,
    calibration_envelope_modulation,
    constant_modulation,
    envelope_modulation,
    normalize,
    std_dev_modulation,
)
from funcbands.conformal import (
    FULL_SPACE,
    PredictionBand,
    SmoothedParams,
    SplitIndices,
    contains,
    fit_band,
    fit_band_smoothed,
    membership_mask,
    naive_band,
    nonconformity_scores,
    p_value,
    pointwise_band,
    pointwise_inside,
    quantile_index,
    split,
    truncate,
)
from funcbands.efficiency import (
    CandidateSizeCheck,
    EnvelopeSizeBound,
    SizeMetric,
    band_size,
    candidate_size_check,
    envelope_radius_identity,
    envelope_size_bound,
)
from funcbands.simulation import (
    CoverageReport,
    ExperimentConfig,
    ScenarioConfig,
    SizeReport,
    bspline_basis,
    empirical_conditional_coverage,
    generate_scenario,
    pointwise_coverage_curve,
    run_experiment,
    sample_multivariate_normal,
    theoretical_coverage,
)
from funcbands.io import (
    read_band,
    read_curves,
    write_band,
    write_band_table,
    write_curves,
)
from funcbands.estimator import ConformalBandPredictor

__version__ = "0.1.0"

__all__ = [
    "CandidateSizeCheck",
    "ConformalBandPredictor",
    "CoverageReport",
    "Curve",
    "CurveFormatError",
    "DegenerateStatisticsError",
    "EnvelopeSizeBound",
    "ExperimentConfig",
    "FULL_SPACE",
    "FuncbandsError",
    "FunctionalSample",
    "Grid",
    "GridMismatchError",
    "ModulationCurve",
    "PredictionBand",
    "ScenarioConfig",
    "SizeMetric",
    "SizeReport",
    "SmoothedParams",
    "SplitIndices",
    "TrimmedIndexSet",
    "adjust_positive",
    "band_size",
    "bspline_basis",
    "calibration_envelope_modulation",
    "candidate_size_check",
    "check_same_grid",
    "constant_modulation",
    "contains",
    "empirical_conditional_coverage",
    "envelope_modulation",
    "envelope_radius_identity",
    "envelope_size_bound",
    "fit_band",
    "fit_band_smoothed",
    "generate_scenario",
    "integrate",
    "make_uniform_grid",
    "mean_curve",
    "membership_mask",
    "naive_band",
    "nonconformity_scores",
    "normalize",
    "p_value",
    "pointwise_band",
    "pointwise_coverage_curve",
    "pointwise_inside",
    "quantile_index",
    "read_band",
    "read_curves",
    "run_experiment",
    "sample_multivariate_normal",
    "split",
    "std_curve",
    "std_dev_modulation",
    "sup_abs_diff",
    "theoretical_coverage",
    "truncate",
    "write_band",
    "write_band_table",
    "write_curves",
]
