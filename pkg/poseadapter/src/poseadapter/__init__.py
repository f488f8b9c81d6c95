"""poseadapter: video -> tapkin landmark files with container-true timestamps."""

from .backends import MarkerBackend, MediaPipeBackend, make_backend
from .errors import (
    BackendUnavailable,
    NoHandsDetectedAnywhere,
    PoseAdapterError,
    UnreadableVideo,
)
from .extract import ExtractionConfig, ExtractionResult, extract
from .fixtures import make_fixture_clip

__version__ = "0.1.0"

__all__ = [
    "BackendUnavailable",
    "ExtractionConfig",
    "ExtractionResult",
    "MarkerBackend",
    "MediaPipeBackend",
    "NoHandsDetectedAnywhere",
    "PoseAdapterError",
    "UnreadableVideo",
    "extract",
    "make_backend",
    "make_fixture_clip",
]
