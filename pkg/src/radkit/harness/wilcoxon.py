"""Two-sided Wilcoxon signed-rank test with an exact small-sample branch.

Differences of zero are dropped before ranking (the classic treatment); the
``pratt`` zero method instead ranks zeros along with everything else and then
discards their ranks. Tied absolute differences share their average rank.

With at most 25 nonzero differences the p-value is exact: under the null each
difference's sign is an independent fair coin, so the distribution of the
positive-rank sum is a subset-sum count over the (tie-averaged) ranks, computed
here by dynamic programming over doubled ranks (doubling makes half-integer
averaged ranks integral). The two-sided p-value sums both symmetric tails at
the observed statistic and is capped at 1. Larger samples use the normal
approximation whose variance term, the sum of squared realized ranks over 4,
automatically carries the usual tie correction.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from ..errors import RadkitError


class AllZeroDifferences(RadkitError):
    """Every paired difference is zero; the test statistic is undefined."""


EXACT_LIMIT = 25


def _doubled_average_ranks(values: Sequence) -> list[int]:
    """Tie-averaged ranks of ``values``, doubled so they are integers."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    doubled = [0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + 1) + (j + 1)  # doubled average of ranks i+1 .. j+1
        for k in range(i, j + 1):
            doubled[order[k]] = shared
        i = j + 1
    return doubled


def _exact_two_sided(doubled: list[int], observed: int) -> float:
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for d in doubled:
        for s in range(total, d - 1, -1):
            if counts[s - d]:
                counts[s] += counts[s - d]
    lo = min(observed, total - observed)
    hi = max(observed, total - observed)
    mass = sum(counts[: lo + 1]) + sum(counts[hi:])
    p = Fraction(mass, 2 ** len(doubled))
    return min(1.0, float(p))


def _approx_two_sided(doubled: list[int], observed: int) -> float:
    total = sum(doubled)
    mean = total / 2.0
    variance = sum(d * d for d in doubled) / 4.0
    z = (observed - mean) / math.sqrt(variance)
    return math.erfc(abs(z) / math.sqrt(2.0))


def wilcoxon_signed_rank(
    x: Sequence[float],
    y: Sequence[float],
    zero_method: str = "wilcox",
) -> float:
    """Two-sided p-value for paired samples ``x`` and ``y``.

    Raises :class:`AllZeroDifferences` when every difference is zero and
    ``ValueError`` on length mismatch, empty input, or an unknown zero method.
    """
    if zero_method not in ("wilcox", "pratt"):
        raise ValueError(f"unknown zero_method {zero_method!r}")
    if len(x) != len(y):
        raise ValueError("paired samples must have equal length")
    if not x:
        raise ValueError("paired samples are empty")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        raise AllZeroDifferences("all paired differences are zero")

    if zero_method == "wilcox":
        ranked_diffs = nonzero
        doubled = _doubled_average_ranks([abs(d) for d in ranked_diffs])
    else:  # pratt: rank zeros too, then discard their ranks
        all_doubled = _doubled_average_ranks([abs(d) for d in diffs])
        ranked_diffs = nonzero
        doubled = [all_doubled[i] for i, d in enumerate(diffs) if d != 0.0]

    observed = sum(d2 for d2, d in zip(doubled, ranked_diffs) if d > 0)
    if len(doubled) <= EXACT_LIMIT:
        return _exact_two_sided(doubled, observed)
    return _approx_two_sided(doubled, observed)
