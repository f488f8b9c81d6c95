"""Hand pose backends: each maps a BGR frame to 21 (x, y) points or None.

The ``mediapipe`` backend wraps the stock MediaPipe Hands estimator and is the
default for real recordings.  The ``marker`` backend tracks two colored
fingertip markers (green thumb, red index) with plain HSV thresholding; it
needs no ML runtime, is fully deterministic, and drives the bundled fixture
clip and the contract tests.
"""

from __future__ import annotations

from typing import Protocol

import cv2
import numpy as np

from .errors import BackendUnavailable

HAND_POINT_COUNT = 21
THUMB_TIP = 4
INDEX_TIP = 8

# fractional-coordinate hand template; only the two tips are measured, the
# remaining joints keep the schema complete for downstream tooling
_TEMPLATE = (
    (0.50, 0.90),
    (0.44, 0.82), (0.40, 0.74), (0.37, 0.66), (0.35, 0.58),
    (0.46, 0.70), (0.45, 0.60), (0.44, 0.52), (0.43, 0.45),
    (0.51, 0.70), (0.51, 0.58), (0.51, 0.49), (0.51, 0.41),
    (0.56, 0.71), (0.57, 0.60), (0.58, 0.52), (0.59, 0.45),
    (0.61, 0.73), (0.63, 0.64), (0.645, 0.58), (0.655, 0.52),
)


class Detection:
    __slots__ = ("points", "confidence")

    def __init__(self, points, confidence):
        self.points = points  # list of 21 (x, y) pixel tuples
        self.confidence = confidence


class HandPoseBackend(Protocol):
    def detect(self, frame_bgr: np.ndarray) -> Detection | None: ...


class MarkerBackend:
    """Track a green (thumb tip) and a red (index tip) marker by HSV centroid."""

    # hue ranges; red wraps around 180 so it uses two bands
    GREEN_LO = (40, 80, 80)
    GREEN_HI = (80, 255, 255)
    RED_LO_1 = (0, 80, 80)
    RED_HI_1 = (10, 255, 255)
    RED_LO_2 = (170, 80, 80)
    RED_HI_2 = (180, 255, 255)

    def __init__(self, min_confidence: float = 0.5, min_area_px: int = 12):
        self.min_confidence = min_confidence
        self.min_area_px = min_area_px

    def _centroid(self, mask: np.ndarray):
        m = cv2.moments(mask, binaryImage=True)
        if m["m00"] < self.min_area_px:
            return None, 0.0
        conf = min(1.0, m["m00"] / (40.0 * self.min_area_px))
        return (m["m10"] / m["m00"], m["m01"] / m["m00"]), conf

    def detect(self, frame_bgr: np.ndarray) -> Detection | None:
        hsv = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2HSV)
        green = cv2.inRange(hsv, self.GREEN_LO, self.GREEN_HI)
        red = cv2.inRange(hsv, self.RED_LO_1, self.RED_HI_1) | cv2.inRange(
            hsv, self.RED_LO_2, self.RED_HI_2
        )
        thumb, conf_t = self._centroid(green)
        index, conf_i = self._centroid(red)
        conf = min(conf_t, conf_i)
        if thumb is None or index is None or conf < self.min_confidence:
            return None
        h, w = frame_bgr.shape[:2]
        points = [(x * w, y * h) for x, y in _TEMPLATE]
        points[THUMB_TIP] = (float(thumb[0]), float(thumb[1]))
        points[INDEX_TIP] = (float(index[0]), float(index[1]))
        return Detection(points, float(conf))


class MediaPipeBackend:
    """Stock MediaPipe Hands estimator (requires the optional dependency)."""

    def __init__(self, hand: str = "auto", min_confidence: float = 0.5):
        try:
            import mediapipe as mp
        except ImportError as exc:
            raise BackendUnavailable(
                "mediapipe is not installed; install poseadapter[mediapipe] "
                "or use --backend marker"
            ) from exc
        self._hands = mp.solutions.hands.Hands(
            static_image_mode=False,
            max_num_hands=2,
            min_detection_confidence=min_confidence,
        )
        self.hand = hand

    def detect(self, frame_bgr: np.ndarray) -> Detection | None:
        rgb = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB)
        result = self._hands.process(rgb)
        if not result.multi_hand_landmarks:
            return None
        candidates = list(
            zip(result.multi_hand_landmarks, result.multi_handedness or [])
        )
        chosen = None
        score = 0.0
        for landmarks, handedness in candidates:
            cls = handedness.classification[0]
            if self.hand != "auto" and cls.label.lower() != self.hand:
                continue
            if chosen is None or cls.score > score:
                chosen, score = landmarks, cls.score
        if chosen is None:
            return None
        h, w = frame_bgr.shape[:2]
        points = [(lm.x * w, lm.y * h) for lm in chosen.landmark]
        return Detection(points, float(score))


def make_backend(name: str, hand: str, min_confidence: float) -> HandPoseBackend:
    if name == "marker":
        return MarkerBackend(min_confidence=min_confidence)
    if name == "mediapipe":
        return MediaPipeBackend(hand=hand, min_confidence=min_confidence)
    raise ValueError(f"unknown backend {name!r}; choose 'mediapipe' or 'marker'")
