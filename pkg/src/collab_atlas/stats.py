"""Fisher's exact test, Spearman correlation and the paired signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

Z95 = 1.959963984540054


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyTable2x2:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"cell {name} must be a non-negative integer, got {v!r}")
        if self.total == 0:
            raise DegenerateInputError("degenerate table: no observations")

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d

    @classmethod
    def from_presence(cls, x: Sequence[bool], y: Sequence[bool]) -> "ContingencyTable2x2":
        """Cross-tabulate two presence vectors over the same documents."""
        x = np.asarray(x, dtype=bool)
        y = np.asarray(y, dtype=bool)
        return cls(int(np.sum(x & y)), int(np.sum(x & ~y)), int(np.sum(~x & y)),
                   int(np.sum(~x & ~y)))


@dataclass(frozen=True)
class FisherResult:
    odds_ratio: float
    ci_low: float
    ci_high: float
    p_value: float
    corrected: bool


def fisher_exact(t: ContingencyTable2x2) -> FisherResult:
    """Two-sided Fisher test with the sample odds ratio and a log-normal 95% CI.

    The p-value sums the hypergeometric probabilities of every table with
    the same margins that is no more likely than the observed one; the
    comparison uses exact integer arithmetic. When exactly one cell is zero
    the odds ratio and CI use the Haldane-Anscombe +0.5 correction.
    """
    a, b, c, d = t.a, t.b, t.c, t.d
    r1, r2, c1 = a + b, c + d, a + c
    if min(r1, r2, c1, b + d) == 0:
        raise DegenerateInputError("degenerate table: a margin is zero")
    weights = {x: comb(r1, x) * comb(r2, c1 - x)
               for x in range(max(0, c1 - r2), min(r1, c1) + 1)}
    observed = weights[a]
    p = sum(w for w in weights.values() if w <= observed) / comb(r1 + r2, c1)

    zeros = sum(v == 0 for v in (a, b, c, d))
    corrected = zeros == 1
    if corrected:
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    if b * c == 0 or a * d == 0:
        odds = math.inf if b * c == 0 and a * d > 0 else (0.0 if a * d == 0 and b * c > 0 else math.nan)
        return FisherResult(odds, math.nan, math.nan, min(1.0, p), corrected)
    odds = (a * d) / (b * c)
    se = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    lo = math.exp(math.log(odds) - Z95 * se)
    hi = math.exp(math.log(odds) + Z95 * se)
    return FisherResult(odds, lo, hi, min(1.0, p), corrected)


@dataclass(frozen=True)
class SpearmanResult:
    rho: float
    ci_low: float
    ci_high: float
    n: int


def spearman(x: Sequence[float], y: Sequence[float]) -> SpearmanResult:
    """Pearson correlation of mid-ranks, with a Fisher-z 95% interval (variance 1.06/(n-3))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least three pairs")
    rx = rankdata(x) - (n + 1) / 2
    ry = rankdata(y) - (n + 1) / 2
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("zero rank variance")
    # one square root of the product keeps rho exactly 1 for identical ranks
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        return SpearmanResult(rho, rho, rho, n)
    if n == 3:
        return SpearmanResult(rho, -1.0, 1.0, n)
    z = math.atanh(rho)
    half = Z95 * math.sqrt(1.06 / (n - 3))
    return SpearmanResult(rho, math.tanh(z - half), math.tanh(z + half), n)


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    exact: bool
    p_greater: float
    p_less: float


def _signed_rank_null(doubled_ranks: np.ndarray) -> np.ndarray:
    """Counts of each attainable 2*W+ over all 2^n sign assignments."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks.astype(int):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float],
                         exact_limit: int = 25) -> WilcoxonResult:
    """Paired signed-rank test on ``x - y``; the statistic is the positive rank sum.

    Zero differences are dropped. Up to ``exact_limit`` remaining pairs the
    null distribution is enumerated (mid-ranks for ties included); above it
    a normal approximation with the tie-corrected variance is used.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    diff = x - y
    diff = diff[diff != 0]
    n = diff.size
    if n == 0:
        raise DegenerateInputError("no nonzero pairs")
    ranks = rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    if n <= exact_limit:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_null(doubled)
        obs = int(round(2 * w_plus))
        denom = 2 ** n
        p_greater = float(sum(counts[obs:])) / denom
        p_less = float(sum(counts[:obs + 1])) / denom
        exact = True
    else:
        _, tie_counts = np.unique(np.abs(diff), return_counts=True)
        mean = n * (n + 1) / 4
        var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(tie_counts ** 3 - tie_counts) / 48
        z = (w_plus - mean) / math.sqrt(var)
        p_greater = 0.5 * math.erfc(z / math.sqrt(2))
        p_less = 0.5 * math.erfc(-z / math.sqrt(2))
        exact = False
    p = min(1.0, 2 * min(p_greater, p_less))
    return WilcoxonResult(w_plus, p, n, exact, p_greater, p_less)
