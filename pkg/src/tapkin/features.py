"""Bradykinesia features from a conditioned distance signal and its cycles.

All ten features plus maximum speed are computed from per-cycle measures taken
between consecutive peaks: the peak-to-peak interval, the closing sweep
amplitude (peak minus the following valley), and the largest absolute velocity
inside the interval.  Decrements are mean-normalized least-squares slopes over
time, so negative values read as the clinical sequence effect.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .cycles import PEAK, CycleSet
from .errors import DegenerateRegression, MalformedRecord, TooFewCycles
from .signal import DerivativeSet, DistanceSignal

MIN_PEAKS_FOR_FEATURES = 4

FEATURE_NAMES = (
    "mean_freq",
    "cv_freq",
    "mean_amp",
    "cv_amp",
    "mean_speed",
    "cv_speed",
    "period_range",
    "roughness",
    "decrement_amp",
    "decrement_speed",
    "max_speed",
)


@dataclass(frozen=True)
class FeatureVector:
    mean_freq: float        # Hz
    cv_freq: float
    mean_amp: float         # normalized units
    cv_amp: float
    mean_speed: float       # 1/s
    cv_speed: float
    period_range: float     # s
    roughness: float
    decrement_amp: float    # 1/s, fractional
    decrement_speed: float  # 1/s, fractional
    max_speed: float        # 1/s

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class CycleMeasures:
    """Per-cycle series; all arrays share length n_peaks - 1."""

    period: np.ndarray     # peak-to-peak interval, s
    freq: np.ndarray       # 1/period, Hz
    amplitude: np.ndarray  # peak minus following valley, normalized
    speed: np.ndarray      # max |velocity| within the interval, 1/s
    t_peak: np.ndarray     # time of the leading peak, s


def cycle_measures(
    signal: DistanceSignal, derivatives: DerivativeSet, cycles: CycleSet
) -> CycleMeasures:
    peaks = cycles.peaks()
    if len(peaks) < MIN_PEAKS_FOR_FEATURES:
        raise TooFewCycles(
            f"{len(peaks)} peaks; need >= {MIN_PEAKS_FOR_FEATURES} for features"
        )
    peak_t = np.array([p.t for p in peaks])
    peak_v = np.array([p.value for p in peaks])
    period = np.diff(peak_t)
    if np.any(period <= 0):
        raise ValueError("peak times must be strictly increasing")

    # the valley that closes each cycle: first valley after the leading peak
    valleys = cycles.valleys()
    amp = np.empty(len(peaks) - 1)
    for i in range(len(peaks) - 1):
        closing = [v for v in valleys if peak_t[i] < v.t < peak_t[i + 1]]
        if not closing:
            raise TooFewCycles(f"no valley between peaks at t={peak_t[i]} and t={peak_t[i + 1]}")
        amp[i] = peak_v[i] - closing[0].value

    speed = np.empty(len(peaks) - 1)
    vel = np.abs(derivatives.velocity)
    for i in range(len(peaks) - 1):
        lo = int(round((peak_t[i] - signal.t0) * signal.fs))
        hi = int(round((peak_t[i + 1] - signal.t0) * signal.fs))
        lo = min(max(lo, 0), len(vel) - 1)
        hi = min(max(hi, lo + 1), len(vel))
        speed[i] = vel[lo:hi].max()

    return CycleMeasures(
        period=period,
        freq=1.0 / period,
        amplitude=amp,
        speed=speed,
        t_peak=peak_t[:-1],
    )


def _cv(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / x.mean())


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom == 0.0:
        raise DegenerateRegression("all abscissae equal")
    return float(np.dot(xc, y - y.mean()) / denom)


def extract_features(
    signal: DistanceSignal, derivatives: DerivativeSet, cycles: CycleSet
) -> FeatureVector:
    m = cycle_measures(signal, derivatives, cycles)

    mean_freq = float(m.freq.mean())
    mean_amp = float(m.amplitude.mean())
    mean_speed = float(m.speed.mean())

    # roughness over the analyzed event span so boundary extrapolation of the
    # derivative filters cannot leak in; equals 1 for a pure sinusoid
    lo = int(round((cycles.events[0].t - signal.t0) * signal.fs))
    hi = int(round((cycles.events[-1].t - signal.t0) * signal.fs)) + 1
    lo = min(max(lo, 0), len(signal) - 1)
    hi = min(max(hi, lo + 1), len(signal))
    vel = derivatives.velocity[lo:hi]
    jerk = derivatives.jerk[lo:hi]
    rms_vel = float(np.sqrt(np.mean(vel**2)))
    rms_jerk = float(np.sqrt(np.mean(jerk**2)))
    roughness = rms_jerk / (rms_vel * (2.0 * np.pi * mean_freq) ** 2)

    return FeatureVector(
        mean_freq=mean_freq,
        cv_freq=_cv(m.freq),
        mean_amp=mean_amp,
        cv_amp=_cv(m.amplitude),
        mean_speed=mean_speed,
        cv_speed=_cv(m.speed),
        period_range=float(m.period.max() - m.period.min()),
        roughness=roughness,
        decrement_amp=_ols_slope(m.t_peak, m.amplitude) / mean_amp,
        decrement_speed=_ols_slope(m.t_peak, m.speed) / mean_speed,
        max_speed=float(np.abs(derivatives.velocity).max()),
    )


# --- feature document -------------------------------------------------------------


def write_feature_doc(fv: FeatureVector, meta: dict[str, str], path) -> None:
    """Flat `name = value` document with a trailing [meta] block."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for name in FEATURE_NAMES:
            fh.write(f"{name} = {getattr(fv, name)!r}\n")
        fh.write("\n[meta]\n")
        for key in sorted(meta):
            fh.write(f"{key} = {meta[key]}\n")


def read_feature_doc(path) -> tuple[FeatureVector, dict[str, str]]:
    path = Path(path)
    values: dict[str, float] = {}
    meta: dict[str, str] = {}
    in_meta = False
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line == "[meta]":
                in_meta = True
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise MalformedRecord(path, line_no, "expected 'name = value'")
            key = key.strip()
            val = val.strip()
            if in_meta:
                meta[key] = val
            else:
                if key not in FEATURE_NAMES:
                    raise MalformedRecord(path, line_no, f"unknown feature {key!r}")
                try:
                    values[key] = float(val)
                except ValueError as exc:
                    raise MalformedRecord(path, line_no, f"bad number: {exc}")
    missing = set(FEATURE_NAMES) - set(values)
    if missing:
        raise MalformedRecord(path, 1, f"missing features: {sorted(missing)}")
    return FeatureVector(**values), meta
