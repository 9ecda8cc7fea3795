"""Hypothesis tests and distances used by the independence audits.

All p-values are asymptotic. Multiple-comparison corrections are left to
the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special
from scipy import stats as sps

from .errors import DomainError, InsufficientDataError, SparseCellError

REJECT = "reject"
FAIL_TO_REJECT = "fail-to-reject"

KS_MIN_SAMPLES = 50


@dataclass(frozen=True)
class TestReport:
    """Outcome of a hypothesis test.

    ``verdict`` is derived from ``p_value < alpha`` and is never passed in.
    ``details`` holds method-specific extras (per-pair tables and the like).
    """

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    alpha: float
    method: str
    details: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha {self.alpha} outside (0, 1)")

    @property
    def verdict(self) -> str:
        return REJECT if self.p_value < self.alpha else FAIL_TO_REJECT

    @property
    def rejected(self) -> bool:
        return self.verdict == REJECT

    def to_dict(self) -> dict[str, Any]:
        out = {
            "method": self.method,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "alpha": float(self.alpha),
            "verdict": self.verdict,
        }
        if self.details:
            out["details"] = self.details
        return out


def ks_statistic(a, b, assume_sorted: bool = False) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.

    Both ECDFs are evaluated at every pooled sample point, where the
    supremum of a difference of step functions is attained.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("KS test needs two non-empty samples")
    if not assume_sorted:
        a = np.sort(a)
        b = np.sort(b)
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(
    a, b, alpha: float = 0.01, assume_sorted: bool = False, min_size: int = KS_MIN_SAMPLES
) -> TestReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if min(a.size, b.size) < max(min_size, 1):
        raise InsufficientDataError(
            f"KS test needs at least {min_size} points per sample, got {a.size} and {b.size}"
        )
    d = ks_statistic(a, b, assume_sorted=assume_sorted)
    n_eff = a.size * b.size / (a.size + b.size)
    p = float(special.kolmogorov(math.sqrt(n_eff) * d))
    return TestReport(d, min(max(p, 0.0), 1.0), alpha, "ks-two-sample",
                      {"n_a": int(a.size), "n_b": int(b.size)})


def chi_square_gof(counts, expected, alpha: float = 0.01) -> TestReport:
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if counts.shape != expected.shape or counts.ndim != 1:
        raise DomainError("counts and expected must be 1-D arrays of equal length")
    if counts.size < 2:
        raise InsufficientDataError("chi-square needs at least two cells")
    if np.any(counts < 0):
        raise DomainError("counts must be non-negative")
    if abs(counts.sum() - expected.sum()) > 1e-6:
        raise DomainError(
            f"total expected {expected.sum()} differs from total observed {counts.sum()}"
        )
    if np.any(expected < 5):
        raise SparseCellError("every expected count must be at least 5; merge sparse cells")
    stat = float(np.sum((counts - expected) ** 2 / expected))
    dof = counts.size - 1
    p = float(sps.chi2.sf(stat, dof))
    return TestReport(stat, p, alpha, "chi-square-gof", {"dof": dof})


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"length mismatch: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < -1e-12) or abs(v.sum() - 1.0) > 1e-9:
            raise DomainError(f"{name} is not a probability vector (sum {v.sum()})")
    return float(0.5 * np.abs(p - q).sum())


@dataclass(frozen=True)
class Interval:
    estimate: float
    low: float
    high: float
    level: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.high - self.low)


def binomial_ci(successes: int, trials: int, level: float = 0.95) -> Interval:
    """Normal-approximation (Wald) interval, clipped to [0, 1]."""
    if trials <= 0:
        raise InsufficientDataError("binomial interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise DomainError(f"successes={successes} outside [0, {trials}]")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level {level} outside (0, 1)")
    phat = successes / trials
    z = float(sps.norm.ppf(0.5 + level / 2))
    half = z * math.sqrt(phat * (1 - phat) / trials)
    return Interval(phat, max(0.0, phat - half), min(1.0, phat + half), level)
