"""Rank statistics for comparing two samples of final coverage."""

from __future__ import annotations

import itertools
import math
from typing import Sequence

from scipy.stats import norm

# exact null distribution when both samples are at most this large
EXACT_LIMIT = 8


def _check(xs: Sequence[float], ys: Sequence[float]) -> None:
    if len(xs) == 0 or len(ys) == 0:
        raise ValueError("both samples must be non-empty")


def vargha_delaney_a12(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Probability that a draw from ``xs`` exceeds one from ``ys``, ties
    counting half."""
    _check(xs, ys)
    greater = ties = 0
    for x in xs:
        for y in ys:
            if x > y:
                greater += 1
            elif x == y:
                ties += 1
    return (greater + 0.5 * ties) / (len(xs) * len(ys))


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, tied values sharing the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def u_statistic(xs: Sequence[float], ys: Sequence[float]) -> float:
    """U of the first sample from its rank sum in the pooled sample."""
    ranks = average_ranks(list(xs) + list(ys))
    n1 = len(xs)
    return sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0


def _exact_p(xs: Sequence[float], ys: Sequence[float], u: float) -> float:
    """Two-sided p from every split of the pooled sample into groups of the
    original sizes (ties handled by the same average ranks)."""
    pooled = list(xs) + list(ys)
    n1, n2 = len(xs), len(ys)
    ranks = average_ranks(pooled)
    mean = n1 * n2 / 2.0
    observed = abs(u - mean)
    extreme = total = 0
    offset = n1 * (n1 + 1) / 2.0
    for idx in itertools.combinations(range(n1 + n2), n1):
        total += 1
        ui = sum(ranks[i] for i in idx) - offset
        if abs(ui - mean) >= observed - 1e-9:
            extreme += 1
    return extreme / total


def _normal_p(xs: Sequence[float], ys: Sequence[float], u: float) -> float:
    n1, n2 = len(xs), len(ys)
    n = n1 + n2
    counts: dict[float, int] = {}
    for v in list(xs) + list(ys):
        counts[v] = counts.get(v, 0) + 1
    tie_term = sum(t**3 - t for t in counts.values()) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    z = (abs(u - n1 * n2 / 2.0) - 0.5) / math.sqrt(var)
    if z <= 0.0:
        return 1.0
    return min(1.0, 2.0 * float(norm.sf(z)))


def mann_whitney_u(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """``(U of xs, two-sided p)``. Exact permutation distribution when both
    samples have at most ``EXACT_LIMIT`` values, otherwise the normal
    approximation with tie-corrected variance and continuity correction."""
    _check(xs, ys)
    u = u_statistic(xs, ys)
    if len(set(xs) | set(ys)) == 1:
        return u, 1.0
    if len(xs) <= EXACT_LIMIT and len(ys) <= EXACT_LIMIT:
        return u, _exact_p(xs, ys, u)
    return u, _normal_p(xs, ys, u)


__all__ = ["EXACT_LIMIT", "average_ranks", "mann_whitney_u", "u_statistic", "vargha_delaney_a12"]
