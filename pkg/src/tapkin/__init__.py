"""tapkin: finger-tapping kinematics toolkit.

Turns hand-landmark time series from finger-tapping recordings into a
conditioned thumb-index distance signal, tap-cycle events, bradykinesia
features, and the accuracy/reliability statistics used to compare recording
channels; includes a synthetic generator and a streaming-degradation
simulator with analytic ground truth.
"""

from .cycles import CycleEvent, CycleSet, detect_cycles, import_cycles
from .errors import TapkinError
from .features import FeatureVector, cycle_measures, extract_features
from .landmarks import (
    AnnotationTrack,
    LandmarkFrame,
    LandmarkSeries,
    SeriesMeta,
    annotation_distance,
    fingertip_distance,
    read_annotation_file,
    read_landmark_file,
    write_landmark_file,
)
from .signal import (
    DerivativeSet,
    DistanceSignal,
    PipelineConfig,
    normalize_unit,
    pipeline,
    resample_uniform,
    savgol_derivative,
    savgol_smooth,
)
from .stats import (
    IccResult,
    TestResult,
    compare_groups,
    icc_2_1,
    mann_whitney_u,
    r2_score,
    shapiro_wilk,
    spearman,
    t_test,
)
from .synthlab import (
    DegradationConfig,
    SynthConfig,
    degrade,
    experiment_reliability,
    experiment_speed_accuracy,
    generate,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationTrack",
    "CycleEvent",
    "CycleSet",
    "DegradationConfig",
    "DerivativeSet",
    "DistanceSignal",
    "FeatureVector",
    "IccResult",
    "LandmarkFrame",
    "LandmarkSeries",
    "PipelineConfig",
    "SeriesMeta",
    "SynthConfig",
    "TapkinError",
    "TestResult",
    "annotation_distance",
    "compare_groups",
    "cycle_measures",
    "degrade",
    "detect_cycles",
    "experiment_reliability",
    "experiment_speed_accuracy",
    "extract_features",
    "fingertip_distance",
    "generate",
    "icc_2_1",
    "import_cycles",
    "mann_whitney_u",
    "normalize_unit",
    "pipeline",
    "r2_score",
    "read_annotation_file",
    "read_landmark_file",
    "resample_uniform",
    "savgol_derivative",
    "savgol_smooth",
    "shapiro_wilk",
    "spearman",
    "t_test",
    "write_landmark_file",
]
