"""Synthetic fixture clips for tests and demos.

The clip shows two fingertip markers (green thumb, fixed; red index,
oscillating toward it) doing a tapping motion, with an optional run of
marker-free frames to exercise detection-dropout handling.
"""

from __future__ import annotations

import math
from pathlib import Path

import cv2
import numpy as np


def make_fixture_clip(
    path,
    duration: float = 2.0,
    fps: float = 30.0,
    freq: float = 2.5,
    size: tuple[int, int] = (320, 240),
    dropout: tuple[int, int] | None = (20, 24),
) -> Path:
    """Write a tapping-marker clip; frames in [dropout) carry no markers."""
    path = Path(path)
    w, h = size
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"mp4v"), fps, (w, h)
    )
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")
    n = int(round(duration * fps))
    thumb = (int(w * 0.35), int(h * 0.70))
    max_gap = h * 0.45
    # horizontal offset keeps the markers from occluding each other at full
    # closure, like real thumb and index pads meeting side by side
    side = 16
    try:
        for k in range(n):
            frame = np.full((h, w, 3), 120, np.uint8)
            if dropout is not None and dropout[0] <= k < dropout[1]:
                writer.write(frame)
                continue
            t = k / fps
            gap = max_gap * 0.5 * (1.0 - math.cos(2.0 * math.pi * freq * t))
            index = (thumb[0] + side, int(round(thumb[1] - gap)))
            cv2.circle(frame, thumb, 9, (40, 200, 40), -1)   # green marker
            cv2.circle(frame, index, 9, (40, 40, 220), -1)   # red marker
            writer.write(frame)
    finally:
        writer.release()
    return path
