"""Distance-signal conditioning: resampling, smoothing, normalization, derivatives.

Processing order is fixed: raw distance -> dedupe/resample to a uniform grid ->
Savitzky-Golay smoothing -> 0-1 normalization -> derivatives of the normalized
signal.  Resampling comes first because the smoother assumes uniform sampling
and streamed recordings arrive with repeated frames and jittered timestamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadWindow,
    ConstantSignal,
    EmptySeries,
    MalformedRecord,
    OrderTooHigh,
    TooFewSamples,
    ZeroDuration,
)
from .landmarks import (
    AnnotationTrack,
    LandmarkSeries,
    annotation_distance,
    distance_keys,
    fingertip_distance,
)

DEFAULT_POLY_ORDER = 3
DEFAULT_WINDOW_SECONDS = 0.15
MIN_WINDOW_SAMPLES = 5


@dataclass(frozen=True)
class Provenance:
    """What has been done to a DistanceSignal since ingestion."""

    resampled: bool = False
    smoothed: tuple[int, int] | None = None  # (window_samples, poly_order)
    normalized: bool = False


@dataclass(frozen=True)
class DistanceSignal:
    """Uniformly sampled thumb-index distance signal."""

    t0: float
    fs: float
    values: np.ndarray
    provenance: Provenance = Provenance()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("signal values must be 1-D")
        if self.fs <= 0:
            raise ValueError(f"fs must be > 0, got {self.fs}")
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError("signal values must be finite")
        if self.provenance.normalized and values.size:
            if abs(values.min()) > 1e-12 or abs(values.max() - 1.0) > 1e-12:
                raise ValueError("normalized signal must span exactly [0, 1]")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) / self.fs

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self.values) - 1) / self.fs

    @property
    def duration(self) -> float:
        return (len(self.values) - 1) / self.fs


@dataclass(frozen=True)
class DerivativeSet:
    """First, second, and third derivatives aligned with the parent signal."""

    velocity: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray

    def __post_init__(self):
        v, a, j = (np.asarray(x, dtype=float) for x in (self.velocity, self.acceleration, self.jerk))
        if not (len(v) == len(a) == len(j)):
            raise ValueError("derivative series must share one length")
        for arr, name in ((v, "velocity"), (a, "acceleration"), (j, "jerk")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


# --- uniform resampling (shape-preserving monotone cubic) -----------------------


def _pchip_slopes(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Monotonicity-preserving tangents (weighted-harmonic-mean rule)."""
    h = np.diff(t)
    d = np.diff(y) / h
    n = len(t)
    m = np.zeros(n)

    # interior: harmonic mean weighted by interval lengths; zero at sign changes
    for k in range(1, n - 1):
        if d[k - 1] == 0.0 or d[k] == 0.0 or (d[k - 1] > 0) != (d[k] > 0):
            m[k] = 0.0
        else:
            w1 = 2.0 * h[k] + h[k - 1]
            w2 = h[k] + 2.0 * h[k - 1]
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k])

    m[0] = _edge_slope(h[0], h[1], d[0], d[1]) if n > 2 else d[0]
    m[-1] = _edge_slope(h[-1], h[-2], d[-1], d[-2]) if n > 2 else d[-1]
    return m


def _edge_slope(h0: float, h1: float, d0: float, d1: float) -> float:
    """One-sided three-point slope, clipped to keep the end interval monotone."""
    s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if s * d0 <= 0.0:
        return 0.0
    if d0 * d1 < 0.0 and abs(s) > 3.0 * abs(d0):
        return 3.0 * d0
    return s


def _pchip_eval(t: np.ndarray, y: np.ndarray, m: np.ndarray, u: np.ndarray) -> np.ndarray:
    u = np.clip(u, t[0], t[-1])
    idx = np.searchsorted(t, u, side="right") - 1
    idx = np.clip(idx, 0, len(t) - 2)
    h = t[idx + 1] - t[idx]
    s = (u - t[idx]) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return h00 * y[idx] + h10 * h * m[idx] + h01 * y[idx + 1] + h11 * h * m[idx + 1]


def dedupe_samples(
    samples: Sequence[tuple[float, float]],
    keys: Sequence | None = None,
) -> list[tuple[float, float]]:
    """Collapse consecutive repeated frames to their first occurrence.

    A sample is a repeat when its distance equals the previous one exactly and
    its provenance key (full landmark tuple when available, the distance value
    otherwise) is identical.  Streamed recordings produce such runs when the
    platform re-emits the last decoded frame.
    """
    if keys is not None and len(keys) != len(samples):
        raise ValueError("keys must align with samples")
    out = []
    prev_d = prev_key = None
    for i, (t, d) in enumerate(samples):
        key = keys[i] if keys is not None else d
        if out and d == prev_d and key == prev_key:
            continue
        out.append((t, d))
        prev_d, prev_key = d, key
    return out


def resample_uniform(
    samples: Sequence[tuple[float, float]],
    target_fs: float,
    dedupe: bool = False,
    keys: Sequence | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Resample (t, d) samples onto the grid t0 + k/target_fs covering the span.

    Interpolation is shape-preserving monotone cubic between the retained
    knots, so interpolated values never overshoot local extrema.
    """
    if target_fs <= 0:
        raise ValueError(f"target_fs must be > 0, got {target_fs}")
    if len(samples) < 4:
        raise TooFewSamples(f"resampling needs >= 4 samples, got {len(samples)}")
    if dedupe:
        samples = dedupe_samples(samples, keys)
    t_list, d_list = [], []
    for t, d in samples:
        # duplicated timestamps are legal input; interpolation keeps the first
        if t_list and t == t_list[-1]:
            continue
        if t_list and t < t_list[-1]:
            raise ValueError("samples must be in non-decreasing time order")
        t_list.append(t)
        d_list.append(d)
    t = np.asarray(t_list, dtype=float)
    y = np.asarray(d_list, dtype=float)
    span = t[-1] - t[0]
    if span <= 0:
        raise ZeroDuration("samples span zero seconds")
    m = _pchip_slopes(t, y)
    n_out = int(math.floor(span * target_fs + 1e-9)) + 1
    grid = t[0] + np.arange(n_out) / target_fs
    return grid, _pchip_eval(t, y, m, grid)


# --- Savitzky-Golay smoothing and differentiation --------------------------------


def _check_window(window_samples: int, poly_order: int, n: int) -> None:
    if poly_order < 2:
        raise ValueError(f"poly_order must be >= 2, got {poly_order}")
    if window_samples % 2 == 0:
        raise BadWindow(f"window must be odd, got {window_samples}")
    if window_samples < poly_order + 2:
        raise BadWindow(
            f"window {window_samples} too small for poly_order {poly_order}"
        )
    if window_samples > n:
        raise BadWindow(f"window {window_samples} longer than signal ({n} samples)")


def _savgol_design(window_samples: int, poly_order: int) -> np.ndarray:
    """Pseudo-inverse of the window Vandermonde; row d holds the d-th poly coef."""
    half = window_samples // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    vander = offsets[:, None] ** np.arange(poly_order + 1)[None, :]
    return np.linalg.pinv(vander)


def _savgol_apply(
    values: np.ndarray, window_samples: int, poly_order: int, deriv: int
) -> np.ndarray:
    """Apply the local least-squares fit; derivatives are per sample step.

    Interior samples use the sliding-window projection.  Edge samples evaluate
    the polynomial fitted to the first/last full window (extrapolation rather
    than mirroring, which would fabricate an extremum at the boundary).
    """
    n = len(values)
    half = window_samples // 2
    proj = _savgol_design(window_samples, poly_order)
    scale = math.factorial(deriv)
    kernel = proj[deriv] * scale

    out = np.empty(n, dtype=float)
    # correlation of each window with the projection row
    windows = np.lib.stride_tricks.sliding_window_view(values, window_samples)
    out[half : n - half] = windows @ kernel

    powers = np.arange(poly_order + 1 - deriv)
    head_coef = proj @ values[:window_samples]
    tail_coef = proj @ values[n - window_samples :]
    dcoef_head = head_coef[deriv:] * [
        math.factorial(deriv + k) / math.factorial(k) for k in powers
    ]
    dcoef_tail = tail_coef[deriv:] * [
        math.factorial(deriv + k) / math.factorial(k) for k in powers
    ]
    x_head = np.arange(-half, 0, dtype=float)
    x_tail = np.arange(1, half + 1, dtype=float)
    out[:half] = (x_head[:, None] ** powers) @ dcoef_head
    out[n - half :] = (x_tail[:, None] ** powers) @ dcoef_tail
    return out


def savgol_smooth(values, window_samples: int, poly_order: int) -> np.ndarray:
    """Least-squares polynomial smoothing over a sliding window."""
    values = np.asarray(values, dtype=float)
    _check_window(window_samples, poly_order, len(values))
    return _savgol_apply(values, window_samples, poly_order, deriv=0)


def savgol_derivative(
    values, window_samples: int, poly_order: int, order: int, fs: float
) -> np.ndarray:
    """Derivative of the local fit polynomial, scaled by fs**order to 1/s units."""
    values = np.asarray(values, dtype=float)
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2, or 3, got {order}")
    if order > poly_order:
        raise OrderTooHigh(
            f"derivative order {order} exceeds poly_order {poly_order}"
        )
    _check_window(window_samples, poly_order, len(values))
    return _savgol_apply(values, window_samples, poly_order, deriv=order) * fs**order


def default_window_samples(fs: float, window_seconds: float = DEFAULT_WINDOW_SECONDS) -> int:
    """Nearest odd sample count to window_seconds at fs, floored at 5."""
    w = int(round(window_seconds * fs))
    if w % 2 == 0:
        w += 1
    return max(w, MIN_WINDOW_SAMPLES)


# --- normalization -----------------------------------------------------------------


def normalize_unit(values) -> np.ndarray:
    """Affine map onto [0, 1]; 0 and 1 mark full closing and full opening."""
    values = np.asarray(values, dtype=float)
    lo = values.min()
    hi = values.max()
    if hi - lo <= 0:
        raise ConstantSignal("signal has no range; cannot normalize")
    out = (values - lo) / (hi - lo)
    # guard the exact-endpoint invariant against rounding
    out[np.argmin(values)] = 0.0
    out[np.argmax(values)] = 1.0
    return out


# --- pipeline ------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the distance pipeline; None means derive from the input."""

    target_fs: float | None = None
    window_samples: int | None = None
    poly_order: int = DEFAULT_POLY_ORDER
    window_seconds: float = DEFAULT_WINDOW_SECONDS
    dedupe: bool = False
    normalize: bool = True


def _extract_samples(source) -> tuple[list[tuple[float, float]], list | None, float | None]:
    if isinstance(source, LandmarkSeries):
        return fingertip_distance(source), distance_keys(source), source.nominal_fps
    if isinstance(source, AnnotationTrack):
        samples = annotation_distance(source)
        keys = [(thumb, index) for _, thumb, index in source.rows]
        return samples, keys, None
    samples = [(float(t), float(d)) for t, d in source]
    if not samples:
        raise EmptySeries("no distance samples")
    return samples, None, None


def _infer_fs(samples: list[tuple[float, float]]) -> float:
    dts = np.diff([t for t, _ in samples])
    dts = dts[dts > 0]
    if dts.size == 0:
        raise ZeroDuration("samples span zero seconds")
    return 1.0 / float(np.median(dts))


def pipeline(
    source, config: PipelineConfig = PipelineConfig()
) -> tuple[DistanceSignal, DerivativeSet]:
    """Full conditioning chain from landmarks/annotations/samples to a
    normalized DistanceSignal plus its derivative set."""
    samples, keys, nominal_fps = _extract_samples(source)
    target_fs = config.target_fs or nominal_fps or _infer_fs(samples)

    grid, values = resample_uniform(samples, target_fs, dedupe=config.dedupe, keys=keys)
    window = config.window_samples or default_window_samples(target_fs, config.window_seconds)
    smoothed = savgol_smooth(values, window, config.poly_order)
    if config.normalize:
        final = normalize_unit(smoothed)
    else:
        final = smoothed
    sig = DistanceSignal(
        t0=float(grid[0]),
        fs=target_fs,
        values=final,
        provenance=Provenance(
            resampled=True,
            smoothed=(window, config.poly_order),
            normalized=config.normalize,
        ),
    )
    # cascaded first derivatives: the first-order filter has a much flatter
    # passband at tapping rates than a single third-order fit, which would
    # bias jerk (and hence roughness) several percent low by 2 Hz
    velocity = savgol_derivative(final, window, config.poly_order, 1, target_fs)
    acceleration = savgol_derivative(velocity, window, config.poly_order, 1, target_fs)
    jerk = savgol_derivative(acceleration, window, config.poly_order, 1, target_fs)
    derivs = DerivativeSet(velocity=velocity, acceleration=acceleration, jerk=jerk)
    return sig, derivs


# --- distance CSV ------------------------------------------------------------------------


def write_distance_csv(sig: DistanceSignal, path) -> None:
    """CSV with '#'-prefixed provenance header lines and t,value rows."""
    path = Path(path)
    p = sig.provenance
    smoothed = "none" if p.smoothed is None else f"{p.smoothed[0]},{p.smoothed[1]}"
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# t0 = {sig.t0!r}\n")
        fh.write(f"# fs = {sig.fs!r}\n")
        fh.write(f"# resampled = {p.resampled}\n")
        fh.write(f"# smoothed = {smoothed}\n")
        fh.write(f"# normalized = {p.normalized}\n")
        fh.write("t,value\n")
        for t, v in zip(sig.times().tolist(), sig.values.tolist()):
            fh.write(f"{t!r},{v!r}\n")


def read_distance_csv(path) -> DistanceSignal:
    path = Path(path)
    header: dict[str, str] = {}
    values = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line.lstrip("# ").partition("=")
                header[key.strip()] = val.strip()
                continue
            if line == "t,value":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise MalformedRecord(path, line_no, "expected t,value")
            try:
                values.append(float(parts[1]))
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad number: {exc}")
    try:
        t0 = float(header["t0"])
        fs = float(header["fs"])
        smoothed_raw = header.get("smoothed", "none")
        smoothed = (
            None
            if smoothed_raw == "none"
            else tuple(int(x) for x in smoothed_raw.split(","))
        )
        prov = Provenance(
            resampled=header.get("resampled", "False") == "True",
            smoothed=smoothed,
            normalized=header.get("normalized", "False") == "True",
        )
    except (KeyError, ValueError) as exc:
        raise MalformedRecord(path, 1, f"bad provenance header: {exc}")
    return DistanceSignal(t0=t0, fs=fs, values=np.asarray(values), provenance=prov)
