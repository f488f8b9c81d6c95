import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tapkin.errors import MissingCells
from tapkin.features import FEATURE_NAMES
from tapkin.reports import (
    AccuracyRow,
    build_accuracy_report,
    build_reliability_report,
    read_accuracy_rows,
    read_feature_table,
    read_reliability_csv,
    summarize_conditions,
    write_accuracy_csv,
    write_feature_table,
    write_reliability_csv,
)
from tapkin.svgplot import svg_lines, svg_scatter


def sample_rows(rng, n_per=8):
    rows = []
    for i in range(n_per):
        rows.append(
            AccuracyRow(
                recording_id=f"dev{i}", condition="on_device", subject=f"s{i}",
                hand="right", max_speed=float(rng.uniform(5, 20)),
                r2=float(rng.uniform(0.95, 0.999)),
            )
        )
        rows.append(
            AccuracyRow(
                recording_id=f"str{i}", condition="streaming", subject=f"s{i}",
                hand="right", max_speed=float(rng.uniform(5, 20)),
                r2=float(rng.uniform(0.6, 0.95)),
            )
        )
    return rows


class TestAccuracyReport:
    def test_summaries_and_comparison(self, rng):
        report = build_accuracy_report(sample_rows(rng), alpha=0.05)
        assert [s.condition for s in report.summaries] == ["on_device", "streaming"]
        dev, streaming = report.summaries
        assert dev.mean_r2 > streaming.mean_r2
        assert report.comparison is not None
        gate_normal = (
            report.comparison.normality_a.p_value >= 0.05
            and report.comparison.normality_b.p_value >= 0.05
        )
        assert report.comparison.gate == ("t-test" if gate_normal else "mann-whitney")

    def test_csv_roundtrip_and_summary_recompute(self, tmp_path, rng):
        report = build_accuracy_report(sample_rows(rng), alpha=0.05)
        path = tmp_path / "acc.csv"
        write_accuracy_csv(report, path)
        rows, header = read_accuracy_rows(path)
        assert len(rows) == len(report.rows)
        rebuilt = build_accuracy_report(rows, alpha=float(header["alpha"][0]))
        stored = [
            f"{s.condition},{s.n},{s.mean_r2!r},{s.std_r2!r},{s.shapiro_w!r},{s.shapiro_p!r},{s.normal}"
            for s in rebuilt.summaries
        ]
        assert stored == header["summary"]

    def test_empty_rows_rejected(self):
        with pytest.raises(MissingCells):
            build_accuracy_report([])

    def test_single_condition_no_comparison(self, rng):
        rows = [r for r in sample_rows(rng) if r.condition == "streaming"]
        report = build_accuracy_report(rows)
        assert report.comparison is None

    def test_summary_nan_shapiro_for_tiny_groups(self, rng):
        rows = sample_rows(rng)[:2]
        summaries = summarize_conditions(rows, alpha=0.05)
        assert all(s.n == 1 for s in summaries)
        assert all(s.shapiro_w != s.shapiro_w for s in summaries)  # NaN


class TestReliabilityReport:
    def make_tables(self, rng):
        truth = {}
        est = {}
        for i in range(6):
            fv = {name: float(rng.uniform(0.1, 2.0)) for name in FEATURE_NAMES}
            truth[f"s{i}"] = fv
            est[f"s{i}"] = {k: v + float(rng.normal(0, 0.01)) for k, v in fv.items()}
        return truth, est

    def test_build_matches_icc_module(self, rng):
        from tapkin.stats import icc_2_1

        truth, est = self.make_tables(rng)
        report = build_reliability_report(truth, est, {"condition": "streaming"})
        subjects = sorted(truth)
        for row in report.rows:
            matrix = np.array(
                [[truth[s][row.feature], est[s][row.feature]] for s in subjects]
            )
            ref = icc_2_1(matrix)
            assert row.icc == ref.icc
            assert row.raw_icc == ref.raw_icc
            assert row.label == ref.label

    def test_identical_tables_all_excellent(self, rng):
        truth, _ = self.make_tables(rng)
        report = build_reliability_report(truth, truth)
        assert all(r.icc == 1.0 and r.label == "excellent" for r in report.rows)

    def test_mismatched_subjects_rejected(self, rng):
        truth, est = self.make_tables(rng)
        del est["s3"]
        est["s9"] = truth["s0"]
        with pytest.raises(MissingCells):
            build_reliability_report(truth, est)

    def test_csv_roundtrip(self, tmp_path, rng):
        truth, est = self.make_tables(rng)
        report = build_reliability_report(truth, est, {"condition": "streaming", "stim_state": "off"})
        p1 = tmp_path / "rel.csv"
        p2 = tmp_path / "rel2.csv"
        write_reliability_csv(report, p1)
        back = read_reliability_csv(p1)
        assert back.rows == report.rows
        assert back.keys == report.keys
        write_reliability_csv(back, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_feature_table_roundtrip(self, tmp_path, rng):
        truth, _ = self.make_tables(rng)
        path = tmp_path / "table.csv"
        write_feature_table(truth, path)
        assert read_feature_table(path) == truth


class TestSvg:
    def test_scatter_valid_xml_one_series_per_group(self, rng):
        groups = {
            "on_device": (rng.uniform(5, 20, 10), rng.uniform(0.9, 1.0, 10)),
            "streaming": (rng.uniform(5, 20, 10), rng.uniform(0.5, 0.9, 10)),
        }
        doc = svg_scatter(groups, "t", "x", "y")
        root = ET.fromstring(doc)
        ns = {"svg": "http://www.w3.org/2000/svg"}
        series = root.findall(".//svg:g[@class='series']", ns)
        assert len(series) == 2
        labels = {g.get("data-label") for g in series}
        assert labels == {"on_device", "streaming"}

    def test_lines_valid_xml(self, rng):
        t = np.linspace(0, 5, 200)
        doc = svg_lines(
            {"reference": (t, np.sin(t)), "estimate": (t, np.sin(t) + 0.05)},
            "overlay", "time (s)", "distance",
        )
        root = ET.fromstring(doc)
        ns = {"svg": "http://www.w3.org/2000/svg"}
        assert len(root.findall(".//svg:g[@class='series']", ns)) == 2
        assert len(root.findall(".//svg:polyline", ns)) == 2

    def test_fit_line_present_per_group(self, rng):
        groups = {"a": (rng.uniform(0, 1, 6), rng.uniform(0, 1, 6))}
        doc = svg_scatter(groups, "t", "x", "y", fit_line=True)
        root = ET.fromstring(doc)
        ns = {"svg": "http://www.w3.org/2000/svg"}
        g = root.findall(".//svg:g[@class='series']", ns)[0]
        assert len(g.findall("svg:line", ns)) == 1
        assert len(g.findall("svg:circle", ns)) == 6

    def test_deterministic_output(self, rng):
        groups = {"a": ([1.0, 2.0, 3.0], [0.5, 0.7, 0.4])}
        assert svg_scatter(groups, "t", "x", "y") == svg_scatter(groups, "t", "x", "y")

    def test_escaping(self):
        doc = svg_scatter({"a<b&c": ([1.0, 2.0], [1.0, 2.0])}, "t<1", "x&y", "y>z")
        ET.fromstring(doc)
