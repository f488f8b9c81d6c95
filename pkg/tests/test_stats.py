import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tapkin.errors import (
    AllEqual,
    ConstantInput,
    ConstantTruth,
    LengthMismatch,
    MissingCells,
    SampleTooLarge,
    SampleTooSmall,
    TooFewTargets,
)
from tapkin.stats import (
    compare_groups,
    exact_u_distribution,
    icc_2_1,
    koo_li_label,
    mann_whitney_u,
    r2_score,
    shapiro_wilk,
    spearman,
    student_t_sf2,
    t_test,
)

# two-sided Student-t tail probabilities, reference values computed with
# mpmath.betainc at 40 decimal digits
T_SF2_REFERENCE = [
    (1.0, 8, 0.3465935070873343),
    (2.5, 3, 0.08770664700806555),
    (0.7, 12, 0.4972741537907075),
    (3.2, 29, 0.003318442463481748),
    (1.96, 1, 0.3003428917760331),
    (0.31, 100, 0.7572060646030278),
    (5.5, 2, 0.031504003041813805),
    (2.0, 17.234, 0.06151433252959088),
]


class TestSpecialFunctions:
    @pytest.mark.parametrize("t,df,expected", T_SF2_REFERENCE)
    def test_student_t_tail_high_precision(self, t, df, expected):
        assert student_t_sf2(t, df) == pytest.approx(expected, abs=1e-12)
        assert student_t_sf2(-t, df) == pytest.approx(expected, abs=1e-12)


class TestR2:
    def test_identity_is_one(self, rng):
        x = rng.normal(size=25)
        assert r2_score(x, x) == 1.0

    def test_mean_estimate_is_zero(self):
        truth = np.array([1.0, 2.0, 3.0, 10.0])
        est = np.full(4, truth.mean())
        assert r2_score(truth, est) == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_sum_of_squares(self):
        # SS_res = (5-3)^2 = 4, SS_tot = sum((y - 1.5)^2) = 5
        assert r2_score([0, 1, 2, 3], [0, 1, 2, 5]) == pytest.approx(0.2, abs=1e-12)

    def test_can_be_negative(self):
        assert r2_score([0, 1, 2, 3], [3, 2, 1, 0]) < 0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            r2_score([1, 2, 3], [1, 2])

    def test_constant_truth(self):
        with pytest.raises(ConstantTruth):
            r2_score([2, 2, 2], [1, 2, 3])

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=20).filter(
            lambda xs: max(xs) - min(xs) > 1e-3
        ),
        st.floats(0.1, 10),
        st.floats(-50, 50),
    )
    def test_affine_invariance(self, truth, a, b):
        truth = np.asarray(truth)
        est = truth + np.linspace(-1, 1, len(truth))
        base = r2_score(truth, est)
        moved = r2_score(a * truth + b, a * est + b)
        assert moved == pytest.approx(base, abs=1e-6)


class TestShapiroWilk:
    @staticmethod
    def normal_quantiles(n):
        from statistics import NormalDist

        return np.array([NormalDist().inv_cdf((i + 0.5) / n) for i in range(n)])

    def test_normal_quantiles_pass(self):
        res = shapiro_wilk(self.normal_quantiles(20))
        assert res.statistic > 0.95
        assert res.p_value > 0.05

    def test_lognormal_quantiles_fail(self):
        res = shapiro_wilk(np.exp(self.normal_quantiles(20)))
        assert res.p_value < 0.05

    def test_all_equal(self):
        with pytest.raises(AllEqual):
            shapiro_wilk([1.0, 1.0, 1.0, 1.0])

    def test_sample_size_limits(self):
        with pytest.raises(SampleTooSmall):
            shapiro_wilk([1.0, 2.0])
        with pytest.raises(SampleTooLarge):
            shapiro_wilk(np.arange(5001, dtype=float))

    def test_w_in_unit_interval_and_affine_invariant(self, rng):
        for _ in range(10):
            x = rng.normal(size=int(rng.integers(4, 60)))
            res = shapiro_wilk(x)
            assert 0.0 < res.statistic <= 1.0
            moved = shapiro_wilk(3.7 * x + 11.0)
            assert moved.statistic == pytest.approx(res.statistic, abs=1e-10)

    def test_against_scipy_reference(self, rng):
        # scipy.stats.shapiro is an independent port of the same published
        # algorithm; statistics must agree closely across sizes and shapes
        scipy_stats = pytest.importorskip("scipy.stats")
        worst_w = 0.0
        for i in range(20):
            n = int(rng.integers(5, 400))
            x = [
                rng.normal(size=n),
                rng.exponential(size=n),
                rng.uniform(size=n),
                rng.standard_t(4, size=n),
            ][i % 4]
            mine = shapiro_wilk(x)
            ref = scipy_stats.shapiro(x)
            worst_w = max(worst_w, abs(mine.statistic - ref.statistic))
            assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-4)
        assert worst_w < 1e-4

    def test_n3_exact_tail(self):
        res = shapiro_wilk([1.0, 2.0, 4.0])
        assert 0.0 <= res.p_value <= 1.0
        res_scipy = pytest.importorskip("scipy.stats").shapiro([1.0, 2.0, 4.0])
        assert res.p_value == pytest.approx(res_scipy.pvalue, abs=1e-6)


class TestTTest:
    def test_identical_samples(self):
        a = [1.0, 2.0, 3.0, 4.0]
        res = t_test(a, a, "welch")
        assert res.statistic == 0.0
        assert res.p_value == 1.0

    def test_separated_groups(self, rng):
        a = rng.normal(0, 0.01, 8)
        b = rng.normal(10, 0.01, 8)
        assert t_test(a, b).p_value < 0.001

    def test_pooled_hand_computed(self):
        # pooled SE = 1.0, df = 8; tail value frozen from the mpmath oracle
        res = t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6], "pooled")
        assert res.statistic == pytest.approx(-1.0, abs=1e-12)
        assert res.p_value == pytest.approx(0.3465935070873343, abs=1e-9)

    def test_sample_too_small(self):
        with pytest.raises(SampleTooSmall):
            t_test([1.0], [1.0, 2.0])

    def test_matches_scipy(self, rng):
        scipy_stats = pytest.importorskip("scipy.stats")
        for variant, equal_var in (("pooled", True), ("welch", False)):
            for _ in range(25):
                a = rng.normal(size=int(rng.integers(3, 30)))
                b = rng.normal(rng.normal(), rng.uniform(0.5, 2), int(rng.integers(3, 30)))
                mine = t_test(a, b, variant)
                ref = scipy_stats.ttest_ind(a, b, equal_var=equal_var)
                assert mine.statistic == pytest.approx(ref.statistic, abs=1e-10)
                assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-10)


class TestMannWhitney:
    def test_enumerated_small_case(self):
        # all C(4,2)=6 rank splits: U values {0,1,2,2,3,4}; P(U<=0)=1/6
        res = mann_whitney_u([1, 2], [3, 4])
        assert res.statistic == 0.0
        assert res.p_value == pytest.approx(2.0 / 6.0, abs=1e-12)
        assert res.method == "mann-whitney-exact"

    def test_u_statistic_identity(self, rng):
        a = rng.normal(size=7)
        b = rng.normal(size=6)
        u_a = mann_whitney_u(a, b).statistic
        u_b = mann_whitney_u(b, a).statistic
        assert u_a + u_b == 42.0

    def test_large_separated_samples(self, rng):
        a = rng.normal(0, 1, 30)
        b = rng.normal(8, 1, 30)
        res = mann_whitney_u(a, b)
        assert res.p_value < 0.001
        assert res.method == "mann-whitney-normal"

    def test_exact_distributions_sum_to_one(self):
        for na in range(1, 9):
            for nb in range(1, 9):
                total = exact_u_distribution(na, nb).sum()
                assert abs(total - 1.0) < 1e-12

    def test_exact_distribution_brute_force_oracle(self):
        # independent enumeration by direct pair counting on permutations
        na, nb = 3, 4
        values = list(range(1, na + nb + 1))
        counts = {}
        for a_set in itertools.combinations(values, na):
            b_set = [v for v in values if v not in a_set]
            u = sum(1 for x in a_set for y in b_set if x > y)
            counts[u] = counts.get(u, 0) + 1
        total = sum(counts.values())
        dist = exact_u_distribution(na, nb)
        for u, c in counts.items():
            assert dist[u] == pytest.approx(c / total, abs=1e-15)

    def test_matches_scipy_exact_and_asymptotic(self, rng):
        scipy_stats = pytest.importorskip("scipy.stats")
        for _ in range(20):
            a = rng.normal(size=int(rng.integers(2, 9)))
            b = rng.normal(size=int(rng.integers(2, 9)))
            mine = mann_whitney_u(a, b)
            ref = scipy_stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
            assert mine.statistic == ref.statistic
            assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-12)
        for _ in range(20):
            a = rng.integers(0, 8, size=25).astype(float)
            b = rng.integers(2, 10, size=30).astype(float)
            mine = mann_whitney_u(a, b)
            ref = scipy_stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
            assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-12)


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]).statistic == 1.0
        assert spearman([1, 2, 3, 4], [5, 4, 3, 2]).statistic == -1.0

    def test_rank_difference_formula(self):
        # 1 - 6*sum(d^2)/(n(n^2-1)) with d = (0, 1, 1, 1, 1) -> 0.8
        res = spearman([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
        assert res.statistic == pytest.approx(0.8, abs=1e-12)

    def test_constant_input(self):
        with pytest.raises(ConstantInput):
            spearman([1, 1, 1, 1], [1, 2, 3, 4])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spearman([1, 2, 3, 4], [1, 2, 3])

    def test_monotone_transform_invariance(self, rng):
        x = rng.normal(size=30)
        y = rng.normal(size=30)
        base = spearman(x, y).statistic
        assert spearman(np.exp(x), y).statistic == pytest.approx(base, abs=1e-12)
        assert spearman(x, y**3).statistic == pytest.approx(base, abs=1e-12)

    def test_matches_scipy(self, rng):
        scipy_stats = pytest.importorskip("scipy.stats")
        for _ in range(25):
            n = int(rng.integers(4, 50))
            x = rng.normal(size=n)
            y = 0.6 * x + rng.normal(size=n)
            mine = spearman(x, y)
            ref = scipy_stats.spearmanr(x, y)
            assert mine.statistic == pytest.approx(ref.statistic, abs=1e-12)
            assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-12)


def anova_icc_oracle(matrix):
    """Direct two-way ANOVA mean squares via explicit loops (test oracle)."""
    matrix = [list(map(float, row)) for row in matrix]
    n = len(matrix)
    k = len(matrix[0])
    grand = sum(sum(row) for row in matrix) / (n * k)
    row_means = [sum(row) / k for row in matrix]
    col_means = [sum(matrix[i][j] for i in range(n)) / n for j in range(k)]
    ss_rows = k * sum((rm - grand) ** 2 for rm in row_means)
    ss_cols = n * sum((cm - grand) ** 2 for cm in col_means)
    ss_tot = sum((matrix[i][j] - grand) ** 2 for i in range(n) for j in range(k))
    ms_r = ss_rows / (n - 1)
    ms_c = ss_cols / (k - 1)
    ms_e = (ss_tot - ss_rows - ss_cols) / ((n - 1) * (k - 1))
    return (ms_r - ms_e) / (ms_r + (k - 1) * ms_e + k / n * (ms_c - ms_e))


class TestIcc:
    def test_identical_raters(self):
        m = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [5.0, 5.0]])
        res = icc_2_1(m)
        assert res.raw_icc == 1.0
        assert res.icc == 1.0
        assert res.label == "excellent"

    def test_constant_offset_penalized(self):
        # closed form for column2 = column1 + c on targets 1..6: 7 / (7 + c^2)
        for c in (1.0, 2.0, 0.5):
            m = np.array([[i, i + c] for i in range(1, 7)], dtype=float)
            res = icc_2_1(m)
            assert res.raw_icc < 1.0
            assert res.raw_icc == pytest.approx(7.0 / (7.0 + c * c), abs=1e-10)
            assert res.raw_icc == pytest.approx(anova_icc_oracle(m), abs=1e-10)

    def test_matches_anova_oracle_on_random_matrices(self, rng):
        for _ in range(30):
            n = int(rng.integers(3, 12))
            k = int(rng.integers(2, 5))
            m = rng.normal(size=(n, k)) + rng.normal(size=(n, 1))
            assert icc_2_1(m).raw_icc == pytest.approx(anova_icc_oracle(m), abs=1e-10)

    def test_negative_clamped_to_zero(self):
        m = np.array([[1.0, 6.0], [2.0, 5.0], [3.0, 4.0], [4.0, 3.0], [5.0, 2.0], [6.0, 1.0]])
        res = icc_2_1(m)
        assert res.raw_icc < 0.0
        assert res.icc == 0.0
        assert res.label == "poor"

    def test_target_permutation_symmetry(self, rng):
        m = rng.normal(size=(8, 3))
        base = icc_2_1(m).raw_icc
        perm = rng.permutation(8)
        assert icc_2_1(m[perm]).raw_icc == pytest.approx(base, abs=1e-12)

    def test_koo_li_label_boundaries(self):
        assert koo_li_label(0.4999999) == "poor"
        assert koo_li_label(0.50) == "moderate"
        assert koo_li_label(0.7499999) == "moderate"
        assert koo_li_label(0.75) == "good"
        assert koo_li_label(0.90) == "good"
        assert koo_li_label(0.9000001) == "excellent"

    def test_too_few_targets(self):
        with pytest.raises(TooFewTargets):
            icc_2_1(np.array([[1.0, 2.0], [2.0, 3.0]]))

    def test_missing_cells(self):
        m = np.array([[1.0, 2.0], [2.0, np.nan], [3.0, 4.0]])
        with pytest.raises(MissingCells):
            icc_2_1(m)


class TestCompareGroups:
    def test_normal_groups_use_t_test(self, rng):
        a = rng.normal(0, 1, 25)
        b = rng.normal(0.3, 1, 25)
        res = compare_groups(a, b)
        assert res.gate == "t-test"
        assert res.test.method.startswith("t-test")

    def test_skewed_groups_use_mann_whitney(self, rng):
        a = np.exp(rng.normal(0, 1.5, 30))
        b = np.exp(rng.normal(0.4, 1.5, 30))
        res = compare_groups(a, b)
        assert res.gate == "mann-whitney"
        assert res.test.method.startswith("mann-whitney")

    def test_gate_matches_shapiro_outputs(self, rng):
        for _ in range(10):
            a = rng.normal(size=20) if rng.random() < 0.5 else np.exp(rng.normal(size=20) * 2)
            b = rng.normal(size=20) if rng.random() < 0.5 else np.exp(rng.normal(size=20) * 2)
            res = compare_groups(a, b, alpha=0.05)
            expected = (
                "t-test"
                if res.normality_a.p_value >= 0.05 and res.normality_b.p_value >= 0.05
                else "mann-whitney"
            )
            assert res.gate == expected
