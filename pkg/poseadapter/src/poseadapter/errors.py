class PoseAdapterError(Exception):
    """Base class for extraction errors."""


class UnreadableVideo(PoseAdapterError):
    """The video cannot be opened or contains no decodable frames."""


class NoHandsDetectedAnywhere(PoseAdapterError):
    """No frame in the whole video produced a hand detection."""


class BackendUnavailable(PoseAdapterError):
    """The requested pose backend is not installed."""
