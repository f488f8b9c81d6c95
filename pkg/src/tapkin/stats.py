"""Statistical battery: R^2, Shapiro-Wilk, t-tests, Mann-Whitney U, Spearman,
and ICC(2,1) with Bartko clamping and Koo-Li reliability labels.

Distribution functions are evaluated natively (incomplete-beta continued
fraction for Student-t, erfc for the normal) so results are deterministic and
dependency-free; unit tests check them against independent references.
All p-values are two-sided.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import (
    AllEqual,
    ConstantInput,
    ConstantTruth,
    LengthMismatch,
    MissingCells,
    SampleTooLarge,
    SampleTooSmall,
    TooFewTargets,
)

_NORMAL = NormalDist()


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    n: tuple[int, ...]

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value out of range: {self.p_value}")


@dataclass(frozen=True)
class IccResult:
    icc: float
    raw_icc: float
    label: str
    n_targets: int
    k_raters: int


# --- special functions ------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t."""
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf2(z: float) -> float:
    """Two-sided tail probability of the standard normal."""
    return math.erfc(abs(z) / math.sqrt(2.0))


# --- coefficient of determination ---------------------------------------------


def r2_score(truth, estimate) -> float:
    """1 - SS_res/SS_tot; negative when the estimate is worse than the mean."""
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise LengthMismatch(f"lengths differ: {len(truth)} vs {len(estimate)}")
    if len(truth) < 3:
        raise SampleTooSmall(f"need >= 3 points, got {len(truth)}")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTruth("reference series is constant")
    ss_res = float(np.sum((truth - estimate) ** 2))
    return 1.0 - ss_res / ss_tot


# --- Shapiro-Wilk (Royston's AS R94 algorithm) ----------------------------------

_SW_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)


def _poly(coeffs, x: float) -> float:
    """Evaluate a polynomial given coefficients in ascending order."""
    total = 0.0
    for c in reversed(coeffs):
        total = total * x + c
    return total


def _shapiro_weights(n: int) -> np.ndarray:
    """Weights for the lower half of the ordered sample."""
    n2 = n // 2
    if n == 3:
        return np.array([math.sqrt(0.5)])
    m = np.array(
        [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n2 + 1)]
    )
    summ2 = 2.0 * float(np.sum(m**2))
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a = m.copy()
    a1 = _poly(_SW_C1, rsn) - m[0] / ssumm2
    if n > 5:
        a2 = _poly(_SW_C2, rsn) - m[1] / ssumm2
        fac = math.sqrt(
            (summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
            / (1.0 - 2.0 * a1**2 - 2.0 * a2**2)
        )
        a[0], a[1] = a1, a2
        a[2:] = m[2:] / -fac
    else:
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1**2))
        a[0] = a1
        a[1:] = m[1:] / -fac
    return a


def shapiro_wilk(sample) -> TestResult:
    """W statistic and p-value following Royston's approximation."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if n < 3:
        raise SampleTooSmall(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if n > 5000:
        raise SampleTooLarge(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if x[-1] - x[0] == 0.0:
        raise AllEqual("all sample values are identical")

    a_lower = _shapiro_weights(n)
    n2 = len(a_lower)
    weights = np.zeros(n)
    weights[:n2] = a_lower
    weights[n - n2 :] = -a_lower[::-1]

    centered = x - x.mean()
    w = float(np.dot(weights, x) ** 2 / np.sum(centered**2))
    w = min(w, 1.0)

    if n == 3:
        # exact small-sample tail
        pw = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.pi / 3.0)
        pw = min(max(pw, 0.0), 1.0)
        return TestResult(w, pw, "shapiro-wilk", (n,))

    y = math.log(1.0 - w)
    if n <= 11:
        gamma = _poly(_SW_G, n)
        if y >= gamma:
            return TestResult(w, 1e-19, "shapiro-wilk", (n,))
        y = -math.log(gamma - y)
        mu = _poly(_SW_C3, n)
        sigma = math.exp(_poly(_SW_C4, n))
    else:
        ln_n = math.log(n)
        mu = _poly(_SW_C5, ln_n)
        sigma = math.exp(_poly(_SW_C6, ln_n))
    pw = 1.0 - normal_cdf((y - mu) / sigma)
    return TestResult(w, min(max(pw, 0.0), 1.0), "shapiro-wilk", (n,))


# --- two-sample location tests ----------------------------------------------------


def t_test(a, b, variant: str = "welch") -> TestResult:
    """Two-sided two-sample t-test; Welch by default, pooled on request."""
    if variant not in ("welch", "pooled"):
        raise ValueError(f"variant must be 'welch' or 'pooled', got {variant!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise SampleTooSmall(f"t-test needs >= 2 per group, got {na} and {nb}")
    ma, mb = a.mean(), b.mean()
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    diff = ma - mb
    if variant == "pooled":
        sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        se = math.sqrt(sp2 * (1.0 / na + 1.0 / nb))
        df = na + nb - 2
    else:
        se = math.sqrt(va / na + vb / nb)
        if se > 0:
            df = (va / na + vb / nb) ** 2 / (
                (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)
            )
        else:
            df = na + nb - 2
    if se == 0.0:
        stat = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        p = 1.0 if diff == 0.0 else 0.0
    else:
        stat = diff / se
        p = student_t_sf2(stat, df)
    return TestResult(stat, p, f"t-test-{variant}", (na, nb))


def _rank_average(values: np.ndarray) -> np.ndarray:
    """Fractional ranks starting at 1; ties share the mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def exact_u_distribution(n_a: int, n_b: int) -> np.ndarray:
    """P(U = u) for u = 0..n_a*n_b under H0, by full enumeration of rank sets."""
    total = n_a + n_b
    counts = np.zeros(n_a * n_b + 1, dtype=float)
    base = n_a * (n_a + 1) // 2
    for combo in itertools.combinations(range(1, total + 1), n_a):
        counts[sum(combo) - base] += 1.0
    return counts / counts.sum()


def mann_whitney_u(a, b) -> TestResult:
    """U statistic for group a; exact p (enumeration) for small tie-free
    samples, tie-corrected normal approximation with continuity otherwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 1 or nb < 1:
        raise SampleTooSmall("both groups must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = _rank_average(pooled)
    r1 = float(ranks[:na].sum())
    u1 = r1 - na * (na + 1) / 2.0  # count of (a, b) pairs with a above b
    u2 = na * nb - u1
    has_ties = len(np.unique(pooled)) < len(pooled)

    if na <= 8 and nb <= 8 and not has_ties:
        dist = exact_u_distribution(na, nb)
        u_small = min(u1, u2)
        p = min(1.0, 2.0 * float(dist[: int(round(u_small)) + 1].sum()))
        return TestResult(u1, p, "mann-whitney-exact", (na, nb))

    n = na + nb
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    sigma2 = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma2 <= 0:
        return TestResult(u1, 1.0, "mann-whitney-normal", (na, nb))
    mu = na * nb / 2.0
    z = (min(u1, u2) - mu + 0.5) / math.sqrt(sigma2)
    p = min(1.0, 2.0 * normal_cdf(z))
    return TestResult(u1, p, "mann-whitney-normal", (na, nb))


# --- rank correlation ---------------------------------------------------------------


def spearman(x, y) -> TestResult:
    """Spearman rho with a Student-t p-value on n-2 degrees of freedom."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 4:
        raise SampleTooSmall(f"spearman needs n >= 4, got {n}")
    rx = _rank_average(x)
    ry = _rank_average(y)
    if np.ptp(rx) == 0.0 or np.ptp(ry) == 0.0:
        raise ConstantInput("an input has no rank variance")
    if np.array_equal(rx, ry):
        rho = 1.0
    elif np.array_equal(rx, (n + 1) - ry):
        rho = -1.0
    else:
        rho = float(
            np.mean((rx - rx.mean()) * (ry - ry.mean())) / (rx.std() * ry.std())
        )
        rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = student_t_sf2(t, n - 2)
    return TestResult(rho, p, "spearman", (n,))


# --- intraclass correlation ------------------------------------------------------------

ICC_LABELS = ("poor", "moderate", "good", "excellent")


def koo_li_label(icc: float) -> str:
    """Reliability class at the 0.50 / 0.75 / 0.90 cut points."""
    if icc < 0.50:
        return "poor"
    if icc < 0.75:
        return "moderate"
    if icc <= 0.90:
        return "good"
    return "excellent"


def icc_2_1(matrix) -> IccResult:
    """ICC(2,1): two-way random effects, absolute agreement, single rater.

    Negative raw values are reported as 0.0 in the clamped field.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValueError("ratings must be a 2-D matrix (targets x raters)")
    n, k = m.shape
    if n < 3:
        raise TooFewTargets(f"ICC needs >= 3 targets, got {n}")
    if k < 2:
        raise ValueError(f"ICC needs >= 2 raters, got {k}")
    if not np.all(np.isfinite(m)):
        raise MissingCells("ratings matrix contains missing or non-finite cells")

    row_means = m.mean(axis=1)
    col_means = m.mean(axis=0)
    # balanced design: the grand mean equals the mean of column means; using
    # that form makes the residual vanish exactly when raters agree perfectly
    grand = col_means.mean()
    resid = m - row_means[:, None] - col_means[None, :] + grand
    ms_r = k * float(np.sum((row_means - grand) ** 2)) / (n - 1)
    ms_c = n * float(np.sum((col_means - grand) ** 2)) / (k - 1)
    ms_e = float(np.sum(resid**2)) / ((n - 1) * (k - 1))

    denom = ms_r + (k - 1) * ms_e + (k / n) * (ms_c - ms_e)
    if denom == 0.0:
        # all cells identical across targets and raters: no variance to attribute
        raw = 0.0
    else:
        raw = (ms_r - ms_e) / denom
    clamped = min(max(raw, 0.0), 1.0)
    return IccResult(
        icc=clamped,
        raw_icc=raw,
        label=koo_li_label(clamped),
        n_targets=n,
        k_raters=k,
    )


# --- normality-gated group comparison ---------------------------------------------------


@dataclass(frozen=True)
class GroupComparison:
    """Shapiro-Wilk gate plus the comparison it selects."""

    normality_a: TestResult
    normality_b: TestResult
    test: TestResult
    gate: str  # "t-test" | "mann-whitney"


def _normality(sample) -> TestResult:
    try:
        return shapiro_wilk(sample)
    except AllEqual:
        # a zero-variance group has no defined W; it cannot pass the gate
        return TestResult(float("nan"), 0.0, "shapiro-wilk-degenerate", (len(sample),))


def compare_groups(a, b, alpha: float = 0.05, t_variant: str = "welch") -> GroupComparison:
    """t-test when both groups pass Shapiro-Wilk at alpha, Mann-Whitney U otherwise."""
    sw_a = _normality(a)
    sw_b = _normality(b)
    if sw_a.p_value >= alpha and sw_b.p_value >= alpha:
        return GroupComparison(sw_a, sw_b, t_test(a, b, t_variant), "t-test")
    return GroupComparison(sw_a, sw_b, mann_whitney_u(a, b), "mann-whitney")
