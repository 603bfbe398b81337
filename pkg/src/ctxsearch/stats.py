"""Rank statistics for the evaluation harness.

The Kruskal-Wallis H statistic is computed from average ranks with the
usual tie correction; its p-value comes from the chi-square upper tail,
evaluated through the regularized incomplete gamma function (series for
small arguments, continued fraction otherwise; absolute error well below
1e-10 for the tiny degrees of freedom used here).
"""

from __future__ import annotations

import math
from collections import Counter
from typing import NamedTuple, Sequence

from .errors import ValidationError

_EPS = 1e-16
_MAX_ITER = 500


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_continued_fraction(a: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail probability P(X >= x) for a chi-square variable."""
    if df < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {df}")
    if x <= 0.0:
        return 1.0
    a = df / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return min(max(1.0 - _gamma_p_series(a, half), 0.0), 1.0)
    return min(max(_gamma_q_continued_fraction(a, half), 0.0), 1.0)


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties assigned their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


class KruskalResult(NamedTuple):
    statistic: float
    df: int
    pvalue: float


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KruskalResult:
    """Kruskal-Wallis H across groups, with tie correction.

    Requires at least two non-empty groups. When every observation is
    identical the statistic is 0 and the p-value 1 (the tie correction
    denominator vanishes along with the numerator).
    """
    if len(groups) < 2:
        raise ValidationError(f"need at least 2 groups, got {len(groups)}")
    sizes = [len(g) for g in groups]
    if any(size == 0 for size in sizes):
        raise ValidationError("every group must be non-empty")
    pooled: list[float] = [float(v) for group in groups for v in group]
    n_total = len(pooled)
    ranks = average_ranks(pooled)
    h = 0.0
    offset = 0
    for size in sizes:
        rank_sum = sum(ranks[offset : offset + size])
        h += rank_sum * rank_sum / size
        offset += size
    h = 12.0 / (n_total * (n_total + 1)) * h - 3.0 * (n_total + 1)
    # tie correction: 1 - sum(t^3 - t) / (N^3 - N) over tie groups
    tie_sum = float(sum(t**3 - t for t in Counter(pooled).values()))
    correction = 1.0 - tie_sum / (n_total**3 - n_total)
    if correction == 0.0:
        return KruskalResult(0.0, len(groups) - 1, 1.0)
    h /= correction
    h = max(h, 0.0)
    df = len(groups) - 1
    return KruskalResult(h, df, chi2_sf(h, df))
