"""Tap-cycle event detection and import.

A tap cycle is delimited by peaks (maximum opening) and valleys (maximum
closing) of the normalized distance signal.  Automatic detection estimates the
dominant tapping period from the autocorrelation, keeps prominent local maxima
separated by a fraction of that period, and places one valley (the global
minimum) between each retained pair of peaks, so event kinds alternate by
construction.  Manual annotations are authoritative when supplied and are
validated, never repaired.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    MalformedRecord,
    NoDominantPeriod,
    NonAlternating,
    OutOfSpan,
    TooFewCycles,
)
from .signal import DistanceSignal

DEFAULT_MIN_PROMINENCE = 0.2
DEFAULT_MIN_SEPARATION_FRACTION = 0.5
MIN_PEAKS = 3
_AUTOCORR_SIGNIFICANCE = 0.2

PEAK = "peak"
VALLEY = "valley"


@dataclass(frozen=True)
class CycleEvent:
    t: float
    value: float
    kind: str

    def __post_init__(self):
        if self.kind not in (PEAK, VALLEY):
            raise ValueError(f"kind must be 'peak' or 'valley', got {self.kind!r}")


@dataclass(frozen=True)
class CycleSet:
    events: tuple[CycleEvent, ...]
    source: str  # "auto" | "manual"

    def __post_init__(self):
        if self.source not in ("auto", "manual"):
            raise ValueError(f"source must be 'auto' or 'manual', got {self.source!r}")

    def validate(self) -> None:
        """Raise NonAlternating if the event sequence violates its invariants."""
        ev = self.events
        for a, b in zip(ev, ev[1:]):
            if b.t <= a.t:
                raise NonAlternating(f"event times not strictly increasing at t={b.t}")
            if a.kind == b.kind:
                raise NonAlternating(f"two consecutive {a.kind}s at t={a.t} and t={b.t}")
        for i, e in enumerate(ev):
            if e.kind != PEAK:
                continue
            for j in (i - 1, i + 1):
                if 0 <= j < len(ev) and not (e.value > ev[j].value):
                    raise NonAlternating(
                        f"peak at t={e.t} not above adjacent valley at t={ev[j].t}"
                    )

    def peaks(self) -> list[CycleEvent]:
        return [e for e in self.events if e.kind == PEAK]

    def valleys(self) -> list[CycleEvent]:
        return [e for e in self.events if e.kind == VALLEY]

    def __len__(self) -> int:
        return len(self.events)


# --- automatic detection -----------------------------------------------------


def dominant_period(signal: DistanceSignal) -> float:
    """Tapping period from the autocorrelation's first significant maximum."""
    x = signal.values - signal.values.mean()
    n = len(x)
    denom = float(np.dot(x, x))
    if denom <= 0.0:
        raise NoDominantPeriod("signal is constant; autocorrelation is flat")
    r = np.correlate(x, x, mode="full")[n - 1 :] / denom
    for k in range(1, n - 2):
        if r[k] >= r[k - 1] and r[k] >= r[k + 1] and r[k] >= _AUTOCORR_SIGNIFICANCE:
            return k / signal.fs
    raise NoDominantPeriod("no significant autocorrelation maximum")


def _local_maxima(x: np.ndarray) -> list[int]:
    """Strict local maxima; plateaus report their first sample."""
    idx = []
    i = 1
    n = len(x)
    while i < n - 1:
        if x[i] > x[i - 1]:
            j = i
            while j + 1 < n and x[j + 1] == x[j]:
                j += 1
            if j + 1 < n and x[j + 1] < x[j]:
                idx.append(i)
            i = j + 1
        else:
            i += 1
    return idx


def peak_prominences(x: np.ndarray, peaks: Sequence[int]) -> np.ndarray:
    """Topographic prominence of each local maximum."""
    proms = np.empty(len(peaks))
    for out_i, p in enumerate(peaks):
        left_min = x[p]
        i = p - 1
        while i >= 0 and x[i] <= x[p]:
            left_min = min(left_min, x[i])
            i -= 1
        right_min = x[p]
        i = p + 1
        while i < len(x) and x[i] <= x[p]:
            right_min = min(right_min, x[i])
            i += 1
        proms[out_i] = x[p] - max(left_min, right_min)
    return proms


def _enforce_separation(x: np.ndarray, peaks: list[int], min_gap: int) -> list[int]:
    """Drop the lesser of any two peaks closer than min_gap samples."""
    order = sorted(range(len(peaks)), key=lambda i: x[peaks[i]], reverse=True)
    keep = [True] * len(peaks)
    for oi in order:
        if not keep[oi]:
            continue
        for oj in range(len(peaks)):
            if oj == oi or not keep[oj]:
                continue
            if abs(peaks[oj] - peaks[oi]) < min_gap:
                keep[oj] = False
    return [p for i, p in enumerate(peaks) if keep[i]]


def detect_cycles(
    signal: DistanceSignal,
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    min_separation_fraction: float = DEFAULT_MIN_SEPARATION_FRACTION,
) -> CycleSet:
    """Detect alternating peak/valley events on a normalized signal."""
    if signal.duration < 2.0:
        raise ValueError(f"need >= 2 s of signal, got {signal.duration:.3f} s")
    x = signal.values
    if float(x.max() - x.min()) <= 0.0:
        raise NoDominantPeriod("signal is constant; autocorrelation is flat")

    candidates = _local_maxima(x)
    proms = peak_prominences(x, candidates)
    prominent = [p for p, pr in zip(candidates, proms) if pr >= min_prominence]
    if len(prominent) < MIN_PEAKS:
        raise TooFewCycles(
            f"found {len(prominent)} prominent peaks, need >= {MIN_PEAKS}"
        )

    period = dominant_period(signal)
    min_gap = max(1, int(round(min_separation_fraction * period * signal.fs)))
    peaks = sorted(_enforce_separation(x, prominent, min_gap))
    if len(peaks) < MIN_PEAKS:
        raise TooFewCycles(f"{len(peaks)} peaks after separation, need >= {MIN_PEAKS}")

    # valleys: global minimum strictly between consecutive peaks; if a valley
    # ties a neighboring peak (plateau), drop the lesser peak and retry
    while True:
        valleys = []
        degenerate = None
        for a, b in zip(peaks, peaks[1:]):
            v = a + 1 + int(np.argmin(x[a + 1 : b]))
            if not (x[a] > x[v] and x[b] > x[v]):
                degenerate = (a, b)
                break
            valleys.append(v)
        if degenerate is None:
            break
        a, b = degenerate
        peaks.remove(a if x[a] <= x[b] else b)
        if len(peaks) < MIN_PEAKS:
            raise TooFewCycles("too few distinct peaks after degeneracy pruning")

    events = []
    for i, p in enumerate(peaks):
        events.append(_refined_event(signal, p, PEAK))
        if i < len(valleys):
            events.append(_refined_event(signal, valleys[i], VALLEY))
    cycles = CycleSet(events=tuple(events), source="auto")
    cycles.validate()
    return cycles


def _refined_event(signal: DistanceSignal, idx: int, kind: str) -> CycleEvent:
    """Quadratic sub-sample refinement of an extremum's time and value.

    Sample-resolution event times quantize peak-to-peak intervals to 1/fs,
    which dominates the error of period-spread features; the parabola through
    the extremum and its neighbors recovers the extremum to a small fraction
    of a sample for band-limited signals.
    """
    x = signal.values
    t = signal.t0 + idx / signal.fs
    if 0 < idx < len(x) - 1:
        a, b, c = x[idx - 1], x[idx], x[idx + 1]
        curv = a - 2.0 * b + c
        if (kind == PEAK and curv < 0.0) or (kind == VALLEY and curv > 0.0):
            offset = 0.5 * (a - c) / curv
            if abs(offset) <= 0.5:
                t = t + offset / signal.fs
                b = b - 0.25 * (a - c) * offset
        return CycleEvent(t=float(t), value=float(b), kind=kind)
    return CycleEvent(t=float(t), value=float(x[idx]), kind=kind)


# --- manual import ---------------------------------------------------------------


def import_cycles(
    signal: DistanceSignal, annotations: Iterable[tuple[float, str]]
) -> CycleSet:
    """Build a CycleSet from manual (t, kind) annotations.

    Values are sampled from the signal at the nearest grid time; alternation is
    validated, not repaired.
    """
    events = []
    t_end = signal.t_end
    for t, kind in annotations:
        if not (signal.t0 <= t <= t_end):
            raise OutOfSpan(
                f"annotation at t={t} outside signal span "
                f"[{signal.t0}, {t_end}]"
            )
        idx = int(round((t - signal.t0) * signal.fs))
        idx = min(max(idx, 0), len(signal) - 1)
        events.append(CycleEvent(t=float(t), value=float(signal.values[idx]), kind=kind))
    cycles = CycleSet(events=tuple(events), source="manual")
    cycles.validate()
    return cycles


# --- cycle CSV --------------------------------------------------------------------


def write_cycles_csv(cycles: CycleSet, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# source = {cycles.source}\n")
        fh.write("t,value,kind\n")
        for e in cycles.events:
            fh.write(f"{e.t!r},{e.value!r},{e.kind}\n")


def read_cycles_csv(path) -> CycleSet:
    path = Path(path)
    source = "auto"
    events = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line.lstrip("# ").partition("=")
                if key.strip() == "source":
                    source = val.strip()
                continue
            if line == "t,value,kind":
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise MalformedRecord(path, line_no, "expected t,value,kind")
            try:
                events.append(
                    CycleEvent(t=float(parts[0]), value=float(parts[1]), kind=parts[2])
                )
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad row: {exc}")
    return CycleSet(events=tuple(events), source=source)


def read_cycle_annotations(path) -> list[tuple[float, str]]:
    """Read manual annotations as (t, kind) rows.

    Accepts both the two-column annotation layout (t,kind) and the full cycle
    CSV layout (t,value,kind); the kind column is always the last one.
    """
    path = Path(path)
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if row[0].strip() == "t":
                continue
            if len(row) not in (2, 3):
                raise MalformedRecord(path, line_no, "expected t,kind or t,value,kind")
            try:
                rows.append((float(row[0]), row[-1].strip()))
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad row: {exc}")
    return rows
