"""Exponential angular-margin losses and their analysis toolkit.

Six similarity families (plain softmax, SphereFace, CosFace, ArcFace,
and the exponential margin in naive and shrink-then-expand forms) with:

- scalar similarity/loss/gradient evaluation on a hot kernel backend
  (compiled when available, pure numpy otherwise; see `active_backend`),
- batch loss and exact backward pass for training,
- transition angles (closed form cross-checked by bisection),
- similarity/gradient curve sweeps with extrema analysis,
- decision-boundary margin fields,
- a seeded noisy-label toy trainer with drift statistics,
- a CSV/SVG-emitting CLI (``expface`` or ``python -m expface``).
"""

from ._backend import active_backend
from .errors import (
    ConfigError,
    DomainError,
    ExpFaceError,
    NonDifferentiablePointError,
    PreconditionError,
    TrainingDivergedError,
)
from .margin_core import (
    DEFAULT_MARGINS,
    DEFAULT_SCALES,
    EPSILON,
    Angle,
    BatchInput,
    Family,
    LossSpec,
    angle_between,
    as_angle,
    batch_loss,
    similarity,
)
from .gradient_engine import (
    GradientCheckReport,
    TransitionContext,
    backward,
    dL_dtheta,
    dT_dtheta,
    finite_diff_check,
    scalar_loss,
    sphereface_breakpoints,
)
from .angular_analysis import (
    CurveSample,
    ExtremaReport,
    MarginFieldPoint,
    analyze_extrema,
    boundary_margin,
    margin_field,
    sweep_gradient,
    sweep_similarity,
    transition_angle,
    transition_angle_bisect,
)
from .noise_sim import (
    AngularTrajectory,
    Dataset,
    DriftRow,
    DriftStatistics,
    NoiseLabel,
    ToySpec,
    TrainingRun,
    drift_statistics,
    generate_dataset,
    train,
    training_run,
)
from .cli_io import CsvTable, RunConfig, main, parse_config, read_csv, run, write_csv

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "ExpFaceError",
    "NonDifferentiablePointError",
    "PreconditionError",
    "TrainingDivergedError",
    "DEFAULT_MARGINS",
    "DEFAULT_SCALES",
    "EPSILON",
    "Angle",
    "BatchInput",
    "Family",
    "LossSpec",
    "angle_between",
    "as_angle",
    "batch_loss",
    "similarity",
    "GradientCheckReport",
    "TransitionContext",
    "backward",
    "dL_dtheta",
    "dT_dtheta",
    "finite_diff_check",
    "scalar_loss",
    "sphereface_breakpoints",
    "CurveSample",
    "ExtremaReport",
    "MarginFieldPoint",
    "analyze_extrema",
    "boundary_margin",
    "margin_field",
    "sweep_gradient",
    "sweep_similarity",
    "transition_angle",
    "transition_angle_bisect",
    "AngularTrajectory",
    "Dataset",
    "DriftRow",
    "DriftStatistics",
    "NoiseLabel",
    "ToySpec",
    "TrainingRun",
    "drift_statistics",
    "generate_dataset",
    "train",
    "training_run",
    "CsvTable",
    "RunConfig",
    "main",
    "parse_config",
    "read_csv",
    "run",
    "write_csv",
    "active_backend",
    "__version__",
]
