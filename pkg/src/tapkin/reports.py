"""Accuracy and reliability report assembly and CSV serialization.

Report CSVs carry their summary block as '#'-prefixed header lines above the
per-recording (or per-feature) rows, so a report file is self-describing and
re-reading the rows and recomputing the summaries reproduces the header
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedRecord, MissingCells
from .features import FEATURE_NAMES
from .stats import GroupComparison, IccResult, TestResult, compare_groups, icc_2_1, spearman


@dataclass(frozen=True)
class AccuracyRow:
    recording_id: str
    condition: str
    subject: str
    hand: str
    max_speed: float
    r2: float


@dataclass(frozen=True)
class ConditionSummary:
    condition: str
    n: int
    mean_r2: float
    std_r2: float
    shapiro_w: float
    shapiro_p: float
    normal: bool


@dataclass(frozen=True)
class AccuracyReport:
    rows: tuple[AccuracyRow, ...]
    summaries: tuple[ConditionSummary, ...]
    comparison: GroupComparison | None
    speed_correlation: TestResult | None
    alpha: float


def summarize_conditions(rows, alpha: float) -> tuple[ConditionSummary, ...]:
    out = []
    for cond in sorted({r.condition for r in rows}):
        r2s = np.array([r.r2 for r in rows if r.condition == cond])
        if len(r2s) >= 3 and np.ptp(r2s) > 0:
            from .stats import shapiro_wilk

            sw = shapiro_wilk(r2s)
            w, p = sw.statistic, sw.p_value
        else:
            w, p = float("nan"), float("nan")
        out.append(
            ConditionSummary(
                condition=cond,
                n=len(r2s),
                mean_r2=float(r2s.mean()),
                std_r2=float(r2s.std(ddof=1)) if len(r2s) > 1 else 0.0,
                shapiro_w=w,
                shapiro_p=p,
                normal=bool(p >= alpha) if p == p else False,
            )
        )
    return tuple(out)


def build_accuracy_report(
    rows,
    alpha: float = 0.05,
    t_variant: str = "welch",
    with_speed_correlation: bool = False,
) -> AccuracyReport:
    rows = tuple(rows)
    if not rows:
        raise MissingCells("accuracy report needs at least one recording row")
    summaries = summarize_conditions(rows, alpha)

    comparison = None
    conditions = [s.condition for s in summaries]
    if len(conditions) == 2:
        a = [r.r2 for r in rows if r.condition == conditions[0]]
        b = [r.r2 for r in rows if r.condition == conditions[1]]
        if len(a) >= 3 and len(b) >= 3:
            comparison = compare_groups(a, b, alpha=alpha, t_variant=t_variant)

    corr = None
    if with_speed_correlation:
        speeds = [r.max_speed for r in rows]
        r2s = [r.r2 for r in rows]
        if len(rows) >= 4 and len(set(speeds)) > 1 and len(set(r2s)) > 1:
            corr = spearman(speeds, r2s)
    return AccuracyReport(
        rows=rows,
        summaries=summaries,
        comparison=comparison,
        speed_correlation=corr,
        alpha=alpha,
    )


def write_accuracy_csv(report: AccuracyReport, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("# report = accuracy\n")
        fh.write(f"# alpha = {report.alpha!r}\n")
        for s in report.summaries:
            fh.write(
                f"# summary = {s.condition},{s.n},{s.mean_r2!r},{s.std_r2!r},"
                f"{s.shapiro_w!r},{s.shapiro_p!r},{s.normal}\n"
            )
        if report.comparison is not None:
            c = report.comparison
            fh.write(
                f"# comparison = {c.gate},{c.test.method},{c.test.statistic!r},"
                f"{c.test.p_value!r}\n"
            )
        if report.speed_correlation is not None:
            sc = report.speed_correlation
            fh.write(f"# speed_correlation = {sc.statistic!r},{sc.p_value!r}\n")
        fh.write("recording_id,condition,subject,hand,max_speed,r2\n")
        for r in report.rows:
            fh.write(
                f"{r.recording_id},{r.condition},{r.subject},{r.hand},"
                f"{r.max_speed!r},{r.r2!r}\n"
            )


def read_accuracy_rows(path) -> tuple[list[AccuracyRow], dict]:
    """Rows plus the raw header fields of an accuracy report CSV."""
    path = Path(path)
    rows: list[AccuracyRow] = []
    header: dict[str, list[str]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line.lstrip("# ").partition("=")
                header.setdefault(key.strip(), []).append(val.strip())
                continue
            if line.startswith("recording_id,"):
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise MalformedRecord(path, line_no, "expected 6 fields")
            try:
                rows.append(
                    AccuracyRow(
                        recording_id=parts[0],
                        condition=parts[1],
                        subject=parts[2],
                        hand=parts[3],
                        max_speed=float(parts[4]),
                        r2=float(parts[5]),
                    )
                )
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad number: {exc}")
    return rows, header


# --- reliability -------------------------------------------------------------


@dataclass(frozen=True)
class ReliabilityReportRow:
    feature: str
    icc: float
    raw_icc: float
    label: str


@dataclass(frozen=True)
class ReliabilityReport:
    rows: tuple[ReliabilityReportRow, ...]
    keys: dict[str, str]  # grouping context, e.g. condition / stim_state


def build_reliability_report(
    truth_table: dict[str, dict[str, float]],
    estimate_table: dict[str, dict[str, float]],
    keys: dict[str, str] | None = None,
) -> ReliabilityReport:
    """Per-feature ICC(2,1) between two subject->features tables."""
    subjects = sorted(truth_table)
    if sorted(estimate_table) != subjects:
        raise MissingCells(
            "subject sets differ: "
            f"{sorted(set(subjects) ^ set(estimate_table))}"
        )
    rows = []
    for name in FEATURE_NAMES:
        matrix = []
        for s in subjects:
            if name not in truth_table[s] or name not in estimate_table[s]:
                raise MissingCells(f"feature {name!r} missing for subject {s!r}")
            matrix.append([truth_table[s][name], estimate_table[s][name]])
        res: IccResult = icc_2_1(np.array(matrix))
        rows.append(
            ReliabilityReportRow(
                feature=name, icc=res.icc, raw_icc=res.raw_icc, label=res.label
            )
        )
    return ReliabilityReport(rows=tuple(rows), keys=dict(keys or {}))


def write_reliability_csv(report: ReliabilityReport, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("# report = reliability\n")
        for key in sorted(report.keys):
            fh.write(f"# key = {key},{report.keys[key]}\n")
        fh.write("feature,icc,raw_icc,label\n")
        for r in report.rows:
            fh.write(f"{r.feature},{r.icc!r},{r.raw_icc!r},{r.label}\n")


def read_reliability_csv(path) -> ReliabilityReport:
    path = Path(path)
    rows = []
    keys: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line.lstrip("# ").partition("=")
                if key.strip() == "key":
                    k, _, v = val.strip().partition(",")
                    keys[k] = v
                continue
            if line == "feature,icc,raw_icc,label":
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise MalformedRecord(path, line_no, "expected feature,icc,raw_icc,label")
            try:
                rows.append(
                    ReliabilityReportRow(
                        feature=parts[0],
                        icc=float(parts[1]),
                        raw_icc=float(parts[2]),
                        label=parts[3],
                    )
                )
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad number: {exc}")
    return ReliabilityReport(rows=tuple(rows), keys=keys)


# --- feature tables (subject -> features CSV) ----------------------------------


def write_feature_table(table: dict[str, dict[str, float]], path) -> None:
    """CSV with one row per subject and one column per feature."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("subject," + ",".join(FEATURE_NAMES) + "\n")
        for subject in sorted(table):
            vals = ",".join(repr(table[subject][n]) for n in FEATURE_NAMES)
            fh.write(f"{subject},{vals}\n")


def read_feature_table(path) -> dict[str, dict[str, float]]:
    path = Path(path)
    table: dict[str, dict[str, float]] = {}
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:1] != ["subject"]:
            raise MalformedRecord(path, 1, "header must start with 'subject'")
        names = header[1:]
        unknown = set(names) - set(FEATURE_NAMES)
        if unknown:
            raise MalformedRecord(path, 1, f"unknown features: {sorted(unknown)}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names) + 1:
                raise MalformedRecord(path, line_no, "wrong field count")
            try:
                table[parts[0]] = {
                    n: float(v) for n, v in zip(names, parts[1:])
                }
            except ValueError as exc:
                raise MalformedRecord(path, line_no, f"bad number: {exc}")
    return table
