"""Hand-landmark time series: data model, file ingestion, fingertip distance.

The on-disk landmark format is line-delimited JSON (UTF-8): one header record
``{"meta": {...}}`` followed by one record per frame
``{"t": <s>, "points": [[x, y] * 21], "conf": <optional>}``.  A frame whose
hand was not detected carries ``"points": null`` (detection dropout) and is
kept so downstream stages can decide how to bridge the gap.

Point indices follow the standard 21-point hand topology: wrist = 0,
thumb tip = 4, index-finger tip = 8.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    EmptySeries,
    MalformedRecord,
    NonMonotoneTimestamps,
    WrongPointCount,
)

HAND_POINT_COUNT = 21
WRIST = 0
THUMB_TIP = 4
INDEX_TIP = 8

HANDS = ("left", "right")
CONDITIONS = ("on_device", "streaming", "synthetic")
STIM_STATES = ("on", "off", "none")


@dataclass(frozen=True)
class SeriesMeta:
    """Recording provenance carried in the landmark file header."""

    subject_id: str
    hand: str = "right"
    condition: str = "on_device"
    stim_state: str = "none"

    def __post_init__(self):
        if self.hand not in HANDS:
            raise ValueError(f"hand must be one of {HANDS}, got {self.hand!r}")
        if self.condition not in CONDITIONS:
            raise ValueError(
                f"condition must be one of {CONDITIONS}, got {self.condition!r}"
            )
        if self.stim_state not in STIM_STATES:
            raise ValueError(
                f"stim_state must be one of {STIM_STATES}, got {self.stim_state!r}"
            )


@dataclass(frozen=True)
class LandmarkFrame:
    """One video frame: timestamp plus 21 (x, y) points, or None on dropout."""

    t: float
    points: tuple[tuple[float, float], ...] | None
    confidence: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.t) or self.t < 0:
            raise ValueError(f"frame timestamp must be finite and >= 0, got {self.t}")
        if self.points is not None and len(self.points) != HAND_POINT_COUNT:
            raise WrongPointCount(
                f"frame at t={self.t} has {len(self.points)} points, "
                f"expected {HAND_POINT_COUNT}"
            )

    @property
    def detected(self) -> bool:
        return self.points is not None


@dataclass(frozen=True)
class LandmarkSeries:
    """Timestamp-ordered landmark frames for one hand in one recording."""

    frames: tuple[LandmarkFrame, ...]
    nominal_fps: float
    meta: SeriesMeta

    def __post_init__(self):
        if self.nominal_fps <= 0:
            raise ValueError(f"nominal_fps must be > 0, got {self.nominal_fps}")
        ts = [f.t for f in self.frames]
        for a, b in zip(ts, ts[1:]):
            if b < a:
                raise NonMonotoneTimestamps(
                    f"timestamps decrease: {a} followed by {b}"
                )

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class AnnotationTrack:
    """Manually localized thumb-tip / index-tip positions per frame."""

    rows: tuple[tuple[float, tuple[float, float], tuple[float, float]], ...]

    def __post_init__(self):
        ts = [r[0] for r in self.rows]
        for a, b in zip(ts, ts[1:]):
            if b < a:
                raise NonMonotoneTimestamps(
                    f"annotation timestamps decrease: {a} followed by {b}"
                )

    def __len__(self) -> int:
        return len(self.rows)


def _euclid(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def fingertip_distance(series: LandmarkSeries) -> list[tuple[float, float]]:
    """Per-frame Euclidean distance between thumb tip and index-finger tip.

    Dropout frames (no detection) yield no sample; for fully detected series
    the output has one sample per frame.
    """
    if len(series) == 0:
        raise EmptySeries("landmark series has no frames")
    out = [
        (f.t, _euclid(f.points[THUMB_TIP], f.points[INDEX_TIP]))
        for f in series.frames
        if f.detected
    ]
    if not out:
        raise EmptySeries("landmark series has no detected frames")
    return out


def annotation_distance(track: AnnotationTrack) -> list[tuple[float, float]]:
    """Per-row Euclidean distance between annotated thumb and index tips."""
    if len(track) == 0:
        raise EmptySeries("annotation track has no rows")
    return [(t, _euclid(thumb, index)) for t, thumb, index in track.rows]


def distance_keys(series: LandmarkSeries) -> list[tuple]:
    """Provenance keys for dedupe: the full point tuple of each detected frame.

    Two consecutive samples are collapsible only if the entire hand pose is
    identical, not merely the tip distance.
    """
    return [f.points for f in series.frames if f.detected]


# --- file I/O -----------------------------------------------------------------


def read_landmark_file(path) -> LandmarkSeries:
    """Parse a line-delimited landmark file into a LandmarkSeries."""
    path = Path(path)
    frames: list[LandmarkFrame] = []
    meta = None
    nominal_fps = None
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON ({exc.msg})")
            if not isinstance(rec, dict):
                raise MalformedRecord(path, line_no, "record is not an object")
            if "meta" in rec:
                if meta is not None:
                    raise MalformedRecord(path, line_no, "duplicate header record")
                m = rec["meta"]
                try:
                    nominal_fps = float(m["nominal_fps"])
                    meta = SeriesMeta(
                        subject_id=str(m["subject_id"]),
                        hand=m.get("hand", "right"),
                        condition=m.get("condition", "on_device"),
                        stim_state=m.get("stim_state", "none"),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise MalformedRecord(path, line_no, f"bad header: {exc}")
                continue
            if meta is None:
                raise MalformedRecord(
                    path, line_no, "first record must be the {\"meta\": ...} header"
                )
            if "t" not in rec or "points" not in rec:
                raise MalformedRecord(path, line_no, "frame needs 't' and 'points'")
            raw_points = rec["points"]
            if raw_points is not None:
                if not isinstance(raw_points, list) or any(
                    not isinstance(p, list) or len(p) != 2 for p in raw_points
                ):
                    raise MalformedRecord(path, line_no, "points must be [[x, y], ...]")
                if len(raw_points) != HAND_POINT_COUNT:
                    raise WrongPointCount(
                        f"{path}:{line_no}: {len(raw_points)} points, "
                        f"expected {HAND_POINT_COUNT}"
                    )
            try:
                points = (
                    None
                    if raw_points is None
                    else tuple((float(x), float(y)) for x, y in raw_points)
                )
                conf = rec.get("conf")
                frame = LandmarkFrame(
                    t=float(rec["t"]),
                    points=points,
                    confidence=None if conf is None else float(conf),
                )
            except (TypeError, ValueError) as exc:
                raise MalformedRecord(path, line_no, f"bad frame values: {exc}")
            if frames and frame.t < frames[-1].t:
                raise NonMonotoneTimestamps(
                    f"{path}:{line_no}: timestamp {frame.t} precedes {frames[-1].t}"
                )
            frames.append(frame)
    if meta is None:
        raise MalformedRecord(path, 1, "missing {\"meta\": ...} header record")
    return LandmarkSeries(frames=tuple(frames), nominal_fps=nominal_fps, meta=meta)


def write_landmark_file(series: LandmarkSeries, path) -> None:
    """Write a LandmarkSeries back to the line-delimited format (round-trips)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        header = {
            "meta": {
                "subject_id": series.meta.subject_id,
                "hand": series.meta.hand,
                "condition": series.meta.condition,
                "stim_state": series.meta.stim_state,
                "nominal_fps": series.nominal_fps,
            }
        }
        fh.write(json.dumps(header) + "\n")
        for f in series.frames:
            rec = {
                "t": f.t,
                "points": None if f.points is None else [list(p) for p in f.points],
            }
            if f.confidence is not None:
                rec["conf"] = f.confidence
            fh.write(json.dumps(rec) + "\n")


def read_annotation_file(path) -> AnnotationTrack:
    """Parse a manual-annotation CSV (t,thumb_x,thumb_y,index_x,index_y)."""
    path = Path(path)
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["t", "thumb_x", "thumb_y", "index_x", "index_y"]
        if header is None or [h.strip() for h in header] != expected:
            raise MalformedRecord(path, 1, f"header must be {','.join(expected)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRecord(path, line_no, f"expected 5 fields, got {len(row)}")
            try:
                t, tx, ty, ix, iy = (float(v) for v in row)
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad number: {exc}")
            rows.append((t, (tx, ty), (ix, iy)))
    return AnnotationTrack(rows=tuple(rows))


def write_annotation_file(track: AnnotationTrack, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,thumb_x,thumb_y,index_x,index_y\n")
        for t, (tx, ty), (ix, iy) in track.rows:
            fh.write(f"{t!r},{tx!r},{ty!r},{ix!r},{iy!r}\n")
