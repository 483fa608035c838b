"""Significance tests used on per-trial costs: one-way ANOVA, paired and
unpaired t-tests and the Wilcoxon signed-rank test.

Distribution tails come from the regularized incomplete beta function,
evaluated with a modified-Lentz continued fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

_BETA_EPS = 1e-15
_BETA_TINY = 1e-300
_BETA_MAXIT = 100_000

EXACT_WILCOXON_MAX_N = 25


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    degenerate: bool = False

    __test__ = False  # not a pytest class


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # continued fraction converges fast on the side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail ``P(F > f)`` of the F distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def t_two_sided(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t)))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_two_sided(t, df)
    return 1.0 - tail if t > 0 else tail


def _mean(xs):
    return sum(xs) / len(xs)


def one_way_anova(groups: Sequence[Sequence[float]]) -> TestResult:
    if len(groups) < 2:
        raise ValueError("ANOVA needs at least two groups")
    if any(len(g) < 2 for g in groups):
        raise ValueError("every ANOVA group needs at least two observations")
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand = sum(sum(g) for g in groups) / n_total
    means = [_mean(g) for g in groups]
    ss_between = sum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ss_within = sum(sum((x - m) ** 2 for x in g) for g, m in zip(groups, means))
    df_b, df_w = k - 1, n_total - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            return TestResult(0.0, 1.0, True)
        return TestResult(math.inf, 0.0, True)
    f = (ss_between / df_b) / (ss_within / df_w)
    return TestResult(f, f_sf(f, df_b, df_w))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-tailed paired t-test on ``a - b``."""
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = [x - y for x, y in zip(a, b)]
    md = _mean(d)
    var = sum((x - md) ** 2 for x in d) / (n - 1)
    if var == 0.0:
        if md == 0.0:
            return TestResult(0.0, 1.0, True)
        return TestResult(math.copysign(math.inf, md), 0.0, True)
    t = md / math.sqrt(var / n)
    return TestResult(t, t_two_sided(t, n - 1))


def unpaired_t_test(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Student's two-sample t-test with pooled variance."""
    na, nb = len(a), len(b)
    ma, mb = _mean(a), _mean(b)
    ss = sum((x - ma) ** 2 for x in a) + sum((x - mb) ** 2 for x in b)
    df = na + nb - 2
    if ss == 0.0:
        if ma == mb:
            return TestResult(0.0, 1.0, True)
        return TestResult(math.copysign(math.inf, ma - mb), 0.0, True)
    se = math.sqrt(ss / df * (1.0 / na + 1.0 / nb))
    t = (ma - mb) / se
    return TestResult(t, t_two_sided(t, df))


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for idx in order[i : j + 1]:
            ranks[idx] = rank
        i = j + 1
    return ranks


def _exact_lower_tail(doubled_ranks: list[int], w2: int) -> float:
    """``P(W+ <= w)`` under random signs; ranks and ``w`` are doubled so
    midranks stay integral."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    return sum(counts[: w2 + 1]) / 2.0 ** len(doubled_ranks)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided signed-rank test on ``a - b``; zero differences dropped.

    ``W = min(W+, W-)``.  Exact null distribution up to 25 non-zero
    differences, otherwise the normal approximation with tie and continuity
    corrections.
    """
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    d = [x - y for x, y in zip(a, b) if x != y]
    n = len(d)
    if n == 0:
        return TestResult(0.0, 1.0, True)
    ranks = _midranks([abs(x) for x in d])
    w_plus = sum(r for r, x in zip(ranks, d) if x > 0)
    w_minus = sum(r for r, x in zip(ranks, d) if x < 0)
    w = min(w_plus, w_minus)
    if n <= EXACT_WILCOXON_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        p = min(1.0, 2.0 * _exact_lower_tail(doubled, int(round(2 * w))))
        return TestResult(w, p)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    tie_sizes: dict[float, int] = {}
    for r in ranks:
        tie_sizes[r] = tie_sizes.get(r, 0) + 1
    var -= sum(t**3 - t for t in tie_sizes.values()) / 48.0
    if var <= 0:
        return TestResult(w, 1.0, True)
    diff = w - mean
    correction = 0.5 * (diff > 0) - 0.5 * (diff < 0)
    z = (diff - correction) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return TestResult(w, min(1.0, p))
