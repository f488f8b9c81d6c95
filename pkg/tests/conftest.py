import numpy as np
import pytest

from tapkin.landmarks import (
    HAND_POINT_COUNT,
    INDEX_TIP,
    THUMB_TIP,
    LandmarkFrame,
    LandmarkSeries,
    SeriesMeta,
)


def make_points(thumb=(0.0, 0.0), index=(1.0, 0.0)):
    """21 distinct points with the two tips where requested."""
    pts = [(0.1 * i, 0.05 * i + 0.01) for i in range(HAND_POINT_COUNT)]
    pts[THUMB_TIP] = tuple(map(float, thumb))
    pts[INDEX_TIP] = tuple(map(float, index))
    return tuple(pts)


def make_series(distances, fs=100.0, meta=None, t0=0.0):
    """Landmark series whose fingertip distance equals the given values."""
    meta = meta or SeriesMeta(subject_id="s01")
    frames = tuple(
        LandmarkFrame(t=t0 + k / fs, points=make_points(index=(float(d), 0.0)))
        for k, d in enumerate(distances)
    )
    return LandmarkSeries(frames=frames, nominal_fps=fs, meta=meta)


def cosine_signal(freq=2.0, fs=100.0, duration=15.0, t0=0.0):
    """0.5*(1 - cos(2*pi*freq*t)); min 0, max 1 when the grid hits the extrema."""
    from tapkin.signal import DistanceSignal, Provenance

    n = int(round(duration * fs))
    t = np.arange(n) / fs
    values = 0.5 * (1.0 - np.cos(2.0 * np.pi * freq * t))
    normalized = bool(
        abs(values.min()) < 1e-12 and abs(values.max() - 1.0) < 1e-12
    )
    return DistanceSignal(
        t0=t0, fs=fs, values=values, provenance=Provenance(normalized=normalized)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
