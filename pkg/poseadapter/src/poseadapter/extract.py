"""Video -> landmark file extraction with container-true timestamps.

Each decoded frame is emitted with its container presentation timestamp (not
frame index divided by nominal fps), so variable-frame-rate streaming
recordings keep their real timing.  Frames with no hand detection are written
with a null-points marker rather than skipped, leaving the gap-bridging policy
to the consumer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2

from .backends import HandPoseBackend, make_backend
from .errors import NoHandsDetectedAnywhere, UnreadableVideo

HANDS = ("left", "right", "auto")


@dataclass(frozen=True)
class ExtractionConfig:
    video: str
    output: str
    hand: str = "auto"
    min_confidence: float = 0.5
    backend: str = "mediapipe"
    subject_id: str = "unknown"
    condition: str = "on_device"
    stim_state: str = "none"

    def __post_init__(self):
        if self.hand not in HANDS:
            raise ValueError(f"hand must be one of {HANDS}, got {self.hand!r}")
        if not (0.0 <= self.min_confidence <= 1.0):
            raise ValueError(
                f"min_confidence must be in [0, 1], got {self.min_confidence}"
            )


@dataclass(frozen=True)
class ExtractionResult:
    output: Path
    n_frames: int
    n_detected: int
    nominal_fps: float


def _read_frames(video_path: str):
    """Yield (timestamp_seconds, frame) using container presentation times."""
    cap = cv2.VideoCapture(video_path)
    if not cap.isOpened():
        raise UnreadableVideo(f"cannot open video: {video_path}")
    try:
        fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
        last_t = 0.0
        any_frame = False
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            t = cap.get(cv2.CAP_PROP_POS_MSEC) / 1000.0
            if t < last_t:
                t = last_t  # container glitches must not break monotonicity
            last_t = t
            any_frame = True
            yield fps, t, frame
        if not any_frame:
            raise UnreadableVideo(f"no decodable frames in: {video_path}")
    finally:
        cap.release()


def extract(cfg: ExtractionConfig, backend: HandPoseBackend | None = None) -> ExtractionResult:
    """Run the pose backend over every frame and write the landmark file."""
    backend = backend or make_backend(cfg.backend, cfg.hand, cfg.min_confidence)
    out = Path(cfg.output)

    records = []
    nominal_fps = 0.0
    n_detected = 0
    for fps, t, frame in _read_frames(cfg.video):
        nominal_fps = fps or nominal_fps
        det = backend.detect(frame)
        if det is None:
            records.append({"t": t, "points": None})
            continue
        n_detected += 1
        records.append(
            {
                "t": t,
                "points": [[float(x), float(y)] for x, y in det.points],
                "conf": det.confidence,
            }
        )
    if n_detected == 0:
        raise NoHandsDetectedAnywhere(f"no hand detected in any frame of {cfg.video}")
    if nominal_fps <= 0:
        nominal_fps = 30.0

    hand = cfg.hand if cfg.hand in ("left", "right") else "right"
    header = {
        "meta": {
            "subject_id": cfg.subject_id,
            "hand": hand,
            "condition": cfg.condition,
            "stim_state": cfg.stim_state,
            "nominal_fps": nominal_fps,
        }
    }
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return ExtractionResult(
        output=out,
        n_frames=len(records),
        n_detected=n_detected,
        nominal_fps=nominal_fps,
    )
