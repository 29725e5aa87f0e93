"""Small statistical helpers for checking samplers against exact laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import UsageError


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    pvalue: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.pvalue >= self.alpha


def chisquare_gof(
    counts,
    probs,
    alpha: float = 0.001,
    min_expected: float = 5.0,
) -> GofResult:
    """Chi-square goodness of fit of observed counts against exact cell
    probabilities.

    Cells whose expected count falls below ``min_expected`` are pooled
    into one bucket (standard practice for sparse tails).  Cells with
    zero probability must hold zero counts; observing mass there is an
    immediate failure.
    """
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if counts.shape != probs.shape or counts.ndim != 1:
        raise UsageError("counts and probs must be 1-d and aligned")
    if np.any(counts < 0) or np.any(probs < -1e-15):
        raise UsageError("counts and probs must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise UsageError("need at least one observation")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise UsageError("cell probabilities must sum to 1")

    zero = probs <= 0
    if np.any(counts[zero] > 0):
        return GofResult(statistic=float("inf"), dof=0, pvalue=0.0, alpha=alpha)
    counts, probs = counts[~zero], probs[~zero]

    expected = probs * total
    small = expected < min_expected
    if small.sum() >= 1 and (~small).sum() >= 1:
        counts = np.append(counts[~small], counts[small].sum())
        probs = np.append(probs[~small], probs[small].sum())
        expected = probs * total
    if counts.size < 2:
        # everything pooled into one cell: nothing to test
        return GofResult(statistic=0.0, dof=0, pvalue=1.0, alpha=alpha)

    statistic = float(np.sum((counts - expected) ** 2 / expected))
    dof = counts.size - 1
    pvalue = float(sps.chi2.sf(statistic, dof))
    return GofResult(statistic=statistic, dof=dof, pvalue=pvalue, alpha=alpha)


def binomial_se(p: float, n: int) -> float:
    """Standard error of a frequency estimate from n Bernoulli trials."""
    if n <= 0:
        raise UsageError("need a positive trial count")
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))
