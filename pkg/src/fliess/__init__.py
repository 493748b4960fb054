"""Truncated Chen-Fliess series algebra with operator left inversion.

The library provides the word-indexed series algebra (shuffle and
composition products, shuffle and composition-group inverses), exact
generating series of input-affine realizations, the explicit left
inversion of square input-output operators with a vector relative
degree, and a planning/tracking pipeline for a bi-steerable car built
on those pieces.
"""

from fliess._kernels import BACKEND as KERNEL_BACKEND
from fliess.composition import (
    DeltaSeries,
    compose,
    feedback_product,
    group_inverse,
    modified_compose,
)
from fliess.errors import (
    AlphabetMismatchError,
    ConvergenceError,
    EvaluationError,
    FliessError,
    InversionPreconditionError,
    MapFormatError,
    MatchingConditionError,
    NoRelativeDegreeError,
    PlanningError,
    SimulationError,
    SingularConstantTermError,
    SingularDecouplingError,
    SplineFitError,
)
from fliess.inversion import (
    RelativeDegree,
    TaylorOutput,
    left_invert,
    relative_degree,
    tracking_error_series,
)
from fliess.pipeline import PipelineConfig, PipelineReport, SectionReport, run_pipeline, run_section, track_spline
from fliess.planner import (
    Circle,
    ObstacleMap,
    PathSpline,
    Polygon,
    RrtTree,
    SplineSection,
    bundled_map,
    extract_path,
    fit_spline,
    load_map,
    load_spline,
    rrt_plan,
    save_map,
    smooth_and_spline,
    smooth_path,
)
from fliess.realization import (
    ControlSignal,
    Realization,
    Trajectory,
    fliess_eval,
    generating_series,
    growth_estimate,
    lie_derivative,
    rk4_simulate,
    uniform_grid,
)
from fliess.series import (
    MatrixSeries,
    Series,
    VectorSeries,
    catenate,
    left_shift,
    letter_prefixed,
    natural_forced_split,
    shuffle,
    shuffle_inverse,
    shuffle_power,
)
from fliess.vehicle import (
    CarParams,
    SectionInit,
    augmented_realization,
    car_realization,
    growth_constants,
    solve_first_order_match,
)

__version__ = "0.1.0"

__all__ = [
    "AlphabetMismatchError",
    "CarParams",
    "Circle",
    "ControlSignal",
    "ConvergenceError",
    "DeltaSeries",
    "EvaluationError",
    "FliessError",
    "InversionPreconditionError",
    "KERNEL_BACKEND",
    "MapFormatError",
    "MatchingConditionError",
    "MatrixSeries",
    "NoRelativeDegreeError",
    "ObstacleMap",
    "PathSpline",
    "PipelineConfig",
    "PipelineReport",
    "PlanningError",
    "Polygon",
    "Realization",
    "RelativeDegree",
    "RrtTree",
    "SectionInit",
    "SectionReport",
    "Series",
    "SimulationError",
    "SingularConstantTermError",
    "SingularDecouplingError",
    "SplineFitError",
    "SplineSection",
    "TaylorOutput",
    "Trajectory",
    "VectorSeries",
    "augmented_realization",
    "bundled_map",
    "car_realization",
    "catenate",
    "compose",
    "extract_path",
    "feedback_product",
    "fit_spline",
    "fliess_eval",
    "generating_series",
    "group_inverse",
    "growth_constants",
    "growth_estimate",
    "left_invert",
    "left_shift",
    "letter_prefixed",
    "lie_derivative",
    "load_map",
    "load_spline",
    "modified_compose",
    "natural_forced_split",
    "relative_degree",
    "rk4_simulate",
    "rrt_plan",
    "run_pipeline",
    "run_section",
    "save_map",
    "shuffle",
    "shuffle_inverse",
    "shuffle_power",
    "smooth_and_spline",
    "smooth_path",
    "solve_first_order_match",
    "track_spline",
    "tracking_error_series",
    "uniform_grid",
]
