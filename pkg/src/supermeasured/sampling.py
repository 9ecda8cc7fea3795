"""Replace a correlated distribution by a uniform one on a sampled state space.

Points drawn from a distribution ``rho`` (paired with the uniform grid
measure) become the atoms of a new space. Giving every atom weight ``1/N``
reproduces all of ``rho``'s probabilities, while any dependence between the
hidden variable and the settings is carried by *where the atoms are* rather
than by the distribution over them.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _rng
from .errors import DomainError, EmptySpaceError, InsufficientDataError
from .measure import (
    SETTING_PAIRS,
    BellDensity,
    Distribution,
    Measure,
    SettingPair,
    Subset,
    bell_density,
    normalize,
    probability,
    rectangle_grid,
)
from .stats import TestReport, ks_two_sample

CSV_HEADER = ("lambda", "setting_k", "setting_l")


@dataclass(frozen=True, eq=False)
class SampledSpace:
    """``N`` atoms of the physical state space, each with weight exactly ``1/N``."""

    lam: np.ndarray
    k: np.ndarray
    l: np.ndarray
    seed: int = 0

    def __post_init__(self):
        for name, dtype in (("lam", float), ("k", np.int8), ("l", np.int8)):
            a = np.array(getattr(self, name), dtype=dtype).reshape(-1)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.lam.size == self.k.size == self.l.size):
            raise DomainError("atom arrays have inconsistent lengths")
        if self.lam.size == 0:
            raise EmptySpaceError("a sampled space needs at least one atom")
        if np.any((self.lam < 0) | (self.lam > 1)):
            raise DomainError("hidden variable outside [0, 1]")

    @property
    def n(self) -> int:
        return int(self.lam.size)

    def __len__(self):
        return self.n

    @property
    def atom_weight(self) -> Fraction:
        return Fraction(1, self.n)

    def measure(self) -> Measure:
        """Discrete measure: unit mass on every atom."""
        return Measure.atomic(self.lam, self.k, self.l)

    def distribution(self) -> Distribution:
        """The uniform distribution ``1/N`` on the atoms."""
        return normalize(lambda lam, k, l: np.ones_like(lam), self.measure())

    def bell_density(self) -> BellDensity:
        dist = self.distribution()
        return bell_density(dist, dist.measure)

    def settings_present(self) -> list[SettingPair]:
        idx = np.unique(2 * self.k.astype(int) + self.l)
        return [SETTING_PAIRS[i] for i in idx]

    def lambdas_for(self, settings: SettingPair) -> np.ndarray:
        return self.lam[(self.k == settings.k) & (self.l == settings.l)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for lam, k, l in zip(self.lam, self.k, self.l):
                w.writerow((repr(float(lam)), int(k), int(l)))

    @classmethod
    def from_csv(cls, path, seed: int = 0) -> "SampledSpace":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = tuple(next(r))
            if header != CSV_HEADER:
                raise DomainError(f"unexpected CSV header {header}")
            rows = [(float(a), int(b), int(c)) for a, b, c in r]
        if not rows:
            raise EmptySpaceError(f"{path} has no atoms")
        lam, k, l = zip(*rows)
        return cls(np.array(lam), np.array(k), np.array(l), seed)


def _setting_cell_tables(rho: Distribution):
    mu = rho.measure
    if mu.kind != "uniform":
        raise DomainError("sampling needs a distribution on the uniform grid measure")
    cells = mu.cells
    mass = (rho.node_values * mu.weights).reshape(4, cells)
    setting_p = mass.sum(axis=1)
    setting_cdf = np.cumsum(setting_p) / setting_p.sum()
    setting_cdf[int(np.flatnonzero(setting_p)[-1]):] = 1.0
    cell_cdf = np.zeros_like(mass)
    for s in range(4):
        if setting_p[s] > 0:
            c = np.cumsum(mass[s]) / setting_p[s]
            c[int(np.flatnonzero(mass[s])[-1]):] = 1.0
            cell_cdf[s] = c
    return setting_cdf, cell_cdf, cells


def sample_space(
    rho: Distribution,
    n: int,
    seed: int,
    method: str = "inverse-cdf",
    bound: float | None = None,
    workers: int = 1,
    label: str = "sample-space",
) -> SampledSpace:
    """Draw ``n`` i.i.d. points from ``rho``.

    ``inverse-cdf`` (default) picks a setting pair, then a grid cell by
    inverting the cumulative cell masses, then a uniform position inside the
    cell: exact for the grid-resolved density. ``rejection`` samples the
    continuous density itself and needs ``bound >= max(rho)``.
    """
    if n < 1:
        raise EmptySpaceError("N must be at least 1")
    setting_cdf, cell_cdf, cells = _setting_cell_tables(rho)
    pairs_k = np.array([s.k for s in SETTING_PAIRS], dtype=np.int8)
    pairs_l = np.array([s.l for s in SETTING_PAIRS], dtype=np.int8)

    if method == "inverse-cdf":
        def chunk(i, size):
            rng = _rng.derive_rng(seed, label, i)
            s = np.searchsorted(setting_cdf, rng.random(size), side="right")
            v = rng.random(size)
            cell = np.empty(size, dtype=np.int64)
            for j in range(4):
                m = s == j
                if m.any():
                    cell[m] = np.searchsorted(cell_cdf[j], v[m], side="right")
            lam = (cell + rng.random(size)) / cells
            return lam, s
    elif method == "rejection":
        if bound is None or not bound > 0:
            raise DomainError("rejection sampling needs a positive density bound")
        base = rho.measure.weights.reshape(4, cells)[:, 0]
        base_cdf = np.cumsum(base) / base.sum()

        def chunk(i, size):
            rng = _rng.derive_rng(seed, label, i)
            lams, ss = [], []
            got = 0
            while got < size:
                m = 2 * (size - got) + 16
                s = np.searchsorted(base_cdf, rng.random(m), side="right")
                lam = rng.random(m)
                f = rho(lam, pairs_k[s], pairs_l[s])
                if np.any(f > bound * (1 + 1e-12)):
                    raise DomainError(f"density exceeds the declared bound {bound}")
                keep = rng.random(m) * bound < f
                lams.append(lam[keep])
                ss.append(s[keep])
                got += int(keep.sum())
            return np.concatenate(lams)[:size], np.concatenate(ss)[:size]
    else:
        raise ValueError(f"unknown sampling method {method!r}")

    parts = _rng.run_chunks(chunk, _rng.chunk_sizes(n), workers)
    lam = np.concatenate([p[0] for p in parts])
    s = np.concatenate([p[1] for p in parts])
    return SampledSpace(lam, pairs_k[s], pairs_l[s], seed)


def empirical_probability(space: SampledSpace, subset: Subset | None = None) -> float:
    if subset is None:
        return 1.0
    inside = np.broadcast_to(np.asarray(subset(space.lam, space.k, space.l), bool), (space.n,))
    return int(np.count_nonzero(inside)) / space.n


@dataclass(frozen=True)
class SIAudit:
    """Physical SI (on the uniform distribution) and Bell-SI (on the weighted density)."""

    physical: TestReport
    bell: TestReport

    def to_dict(self):
        return {"physical_si": self.physical.to_dict(), "bell_si": self.bell.to_dict()}


def si_audit(space: SampledSpace, alpha: float = 0.01) -> SIAudit:
    present = space.settings_present()
    if len(present) < 2:
        raise InsufficientDataError("the audit needs atoms for at least two setting pairs")

    # physical SI: rho~(lam | X) is the same constant for every atom and setting
    rho = space.distribution()
    spread = 0.0
    for s in present:
        vals = rho.node_values[(space.k == s.k) & (space.l == s.l)]
        spread = max(spread, float(np.max(np.abs(vals - rho.node_values[0]))))
    physical = TestReport(
        spread, 1.0 if spread == 0.0 else 0.0, alpha, "uniform-by-construction",
        {"settings": [list(s) for s in present]},
    )

    bell = pairwise_ks(
        {s: np.sort(space.lambdas_for(s)) for s in present}, alpha, "bell-si-ks-bonferroni"
    )
    return SIAudit(physical, bell)


def pairwise_ks(samples: dict, alpha: float, method: str) -> TestReport:
    """KS test on every pair of (pre-sorted) samples with Bonferroni correction."""
    keys = list(samples)
    table = []
    for a, b in combinations(keys, 2):
        r = ks_two_sample(samples[a], samples[b], alpha=alpha, assume_sorted=True)
        table.append({"a": list(a), "b": list(b), "statistic": r.statistic, "p_value": r.p_value})
    m = len(table)
    p_min = min(row["p_value"] for row in table)
    return TestReport(
        max(row["statistic"] for row in table),
        min(1.0, m * p_min),
        alpha,
        method,
        {"pairs": table, "bonferroni_factor": m, "min_raw_p_value": p_min},
    )


def correlated_density(strength: float = 0.8):
    """A setting-dependent density on the unit grid space, used in demos and tests.

    ``1 + strength * cos(2 pi (lam - index/4))``: each setting pair prefers a
    different quarter-shifted region of ``lam``.
    """
    if not 0 <= strength <= 1:
        raise DomainError("strength must lie in [0, 1]")

    def f(lam, k, l):
        idx = 2 * np.asarray(k, float) + np.asarray(l, float)
        return 1.0 + strength * np.cos(2 * np.pi * (np.asarray(lam) - idx / 4))

    return f


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    max_error: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.max_error <= self.bound


def convergence_study(
    rho: Distribution,
    ns: Sequence[int],
    seed: int,
    rectangles=None,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """Largest gap between sampled and exact rectangle probabilities, per N.

    The bound reported with each row is ``5 / sqrt(N)``.
    """
    rectangles = rectangle_grid() if rectangles is None else rectangles
    exact_bd = bell_density(rho, rho.measure)
    exact = np.array([probability(exact_bd, r) for r in rectangles])
    rows = []
    for n in ns:
        space = sample_space(rho, n, seed, workers=workers, label=f"convergence/{n}")
        emp = np.array([empirical_probability(space, r) for r in rectangles])
        rows.append(ConvergenceRow(int(n), float(np.max(np.abs(emp - exact))), 5 / math.sqrt(n)))
    return rows


def write_convergence_csv(rows: Sequence[ConvergenceRow], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("n", "max_abs_error", "bound"))
        for r in rows:
            w.writerow((r.n, repr(r.max_error), repr(r.bound)))
