import json
import math

import numpy as np
import pytest

from conftest import make_points, make_series
from tapkin.errors import (
    EmptySeries,
    MalformedRecord,
    NonMonotoneTimestamps,
    WrongPointCount,
)
from tapkin.landmarks import (
    AnnotationTrack,
    LandmarkFrame,
    LandmarkSeries,
    SeriesMeta,
    annotation_distance,
    fingertip_distance,
    read_annotation_file,
    read_landmark_file,
    write_annotation_file,
    write_landmark_file,
)

META_LINE = json.dumps(
    {
        "meta": {
            "subject_id": "s01",
            "hand": "right",
            "condition": "streaming",
            "stim_state": "none",
            "nominal_fps": 25.0,
        }
    }
)


def frame_line(t, points=None, conf=None):
    rec = {"t": t, "points": [list(p) for p in (points or make_points())]}
    if conf is not None:
        rec["conf"] = conf
    return json.dumps(rec)


class TestReadLandmarkFile:
    def test_two_frame_roundtrip(self, tmp_path):
        path = tmp_path / "two.jsonl"
        path.write_text(META_LINE + "\n" + frame_line(0.0) + "\n" + frame_line(0.04) + "\n")
        series = read_landmark_file(path)
        assert len(series) == 2
        assert series.meta.condition == "streaming"
        assert series.nominal_fps == 25.0
        assert series.frames[1].t == 0.04

    def test_wrong_point_count(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        rec = {"t": 0.04, "points": [[0.0, 0.0]] * 20}
        path.write_text(META_LINE + "\n" + frame_line(0.0) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(WrongPointCount):
            read_landmark_file(path)

    def test_duplicate_timestamps_accepted(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        lines = [META_LINE] + [frame_line(t) for t in (0.0, 0.04, 0.04, 0.08)]
        path.write_text("\n".join(lines) + "\n")
        series = read_landmark_file(path)
        assert [f.t for f in series.frames] == [0.0, 0.04, 0.04, 0.08]

    def test_decreasing_timestamps_rejected(self, tmp_path):
        path = tmp_path / "mono.jsonl"
        lines = [META_LINE, frame_line(0.0), frame_line(0.08), frame_line(0.04)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(NonMonotoneTimestamps):
            read_landmark_file(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "mal.jsonl"
        path.write_text(META_LINE + "\n" + frame_line(0.0) + "\n{not json\n")
        with pytest.raises(MalformedRecord) as exc:
            read_landmark_file(path)
        assert exc.value.line_no == 3

    def test_missing_header(self, tmp_path):
        path = tmp_path / "nohead.jsonl"
        path.write_text(frame_line(0.0) + "\n")
        with pytest.raises(MalformedRecord):
            read_landmark_file(path)

    def test_null_points_dropout_frame(self, tmp_path):
        path = tmp_path / "drop.jsonl"
        rec = json.dumps({"t": 0.04, "points": None})
        path.write_text(META_LINE + "\n" + frame_line(0.0) + "\n" + rec + "\n")
        series = read_landmark_file(path)
        assert not series.frames[1].detected
        assert len(fingertip_distance(series)) == 1

    def test_roundtrip_bit_exact(self, tmp_path, rng):
        frames = []
        t = 0.0
        for _ in range(30):
            pts = tuple((float(x), float(y)) for x, y in rng.uniform(0, 640, (21, 2)))
            frames.append(LandmarkFrame(t=t, points=pts, confidence=float(rng.uniform())))
            t += float(rng.uniform(0.001, 0.05))
        series = LandmarkSeries(
            frames=tuple(frames),
            nominal_fps=25.0,
            meta=SeriesMeta("s07", "left", "streaming", "off"),
        )
        p1 = tmp_path / "a.jsonl"
        p2 = tmp_path / "b.jsonl"
        write_landmark_file(series, p1)
        back = read_landmark_file(p1)
        write_landmark_file(back, p2)
        assert p1.read_bytes() == p2.read_bytes()
        for f1, f2 in zip(series.frames, back.frames):
            assert f1 == f2


class TestFingertipDistance:
    def test_three_four_five(self):
        series = make_series([0.0])
        frames = (
            LandmarkFrame(t=0.0, points=make_points(thumb=(0.0, 0.0), index=(3.0, 4.0))),
        )
        series = LandmarkSeries(frames=frames, nominal_fps=100.0, meta=series.meta)
        assert fingertip_distance(series)[0][1] == 5.0

    def test_coincident_points(self):
        frames = (
            LandmarkFrame(t=0.0, points=make_points(thumb=(2.0, 2.0), index=(2.0, 2.0))),
        )
        series = LandmarkSeries(
            frames=frames, nominal_fps=100.0, meta=SeriesMeta("s01")
        )
        assert fingertip_distance(series)[0][1] == 0.0

    def test_derived_formula_case(self):
        # direct evaluation: hypot(4-1, 5-1) = 5
        expected = math.hypot(4 - 1, 5 - 1)
        frames = (
            LandmarkFrame(t=0.0, points=make_points(thumb=(1.0, 1.0), index=(4.0, 5.0))),
        )
        series = LandmarkSeries(
            frames=frames, nominal_fps=100.0, meta=SeriesMeta("s01")
        )
        assert fingertip_distance(series)[0][1] == pytest.approx(expected, abs=1e-12)
        assert expected == 5.0

    def test_empty_series(self):
        series = LandmarkSeries(frames=(), nominal_fps=100.0, meta=SeriesMeta("s01"))
        with pytest.raises(EmptySeries):
            fingertip_distance(series)

    def test_sample_count_matches_frames(self, rng):
        distances = rng.uniform(0.1, 1.0, size=57)
        series = make_series(distances)
        assert len(fingertip_distance(series)) == len(series)

    def test_rigid_transform_invariance(self, rng):
        distances = rng.uniform(0.1, 1.0, size=20)
        series = make_series(distances)
        base = [d for _, d in fingertip_distance(series)]
        for _ in range(5):
            theta = float(rng.uniform(0, 2 * np.pi))
            dx, dy = rng.uniform(-50, 50, 2)
            c, s = math.cos(theta), math.sin(theta)
            frames = []
            for f in series.frames:
                pts = tuple(
                    (c * x - s * y + dx, s * x + c * y + dy) for x, y in f.points
                )
                frames.append(LandmarkFrame(t=f.t, points=pts))
            moved = LandmarkSeries(
                frames=tuple(frames), nominal_fps=100.0, meta=series.meta
            )
            got = [d for _, d in fingertip_distance(moved)]
            np.testing.assert_allclose(got, base, rtol=1e-9)


class TestAnnotations:
    def test_distance_matches_fingertip_arithmetic(self):
        track = AnnotationTrack(
            rows=(
                (0.0, (0.0, 0.0), (3.0, 4.0)),
                (0.1, (2.0, 2.0), (2.0, 2.0)),
                (0.2, (1.0, 1.0), (4.0, 5.0)),
            )
        )
        out = annotation_distance(track)
        assert [d for _, d in out] == [5.0, 0.0, 5.0]

    def test_empty_track(self):
        with pytest.raises(EmptySeries):
            annotation_distance(AnnotationTrack(rows=()))

    def test_csv_roundtrip(self, tmp_path, rng):
        rows = tuple(
            (
                round(0.04 * i, 6),
                (float(rng.uniform(0, 640)), float(rng.uniform(0, 360))),
                (float(rng.uniform(0, 640)), float(rng.uniform(0, 360))),
            )
            for i in range(10)
        )
        track = AnnotationTrack(rows=rows)
        path = tmp_path / "ann.csv"
        write_annotation_file(track, path)
        back = read_annotation_file(path)
        assert back == track

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,tx,ty,ix,iy\n0,0,0,1,1\n")
        with pytest.raises(MalformedRecord):
            read_annotation_file(path)

    def test_non_monotone_rejected(self):
        with pytest.raises(NonMonotoneTimestamps):
            AnnotationTrack(
                rows=((0.1, (0, 0), (1, 1)), (0.0, (0, 0), (1, 1)))
            )
