"""State spaces, measures, distributions and their product.

The mathematical state space is ``[0, 1] x {0,1}^2``: a hidden variable
``lam`` together with a pair of binary setting choices ``(k, l)``. Every
measure is represented by a finite set of *nodes* carrying non-negative
mass:

* ``uniform``: the centres of a fixed grid of ``cells`` intervals on
  ``[0, 1]``, crossed with the four setting pairs; each node weighs
  ``setting_mass[k, l] / cells`` (midpoint quadrature).
* ``weighted-by-subspace``: the same grid, but each node's mass is further
  multiplied by the weight of the subspace its label falls in.
* ``atomic``: an explicit list of points with masses.

All integrals against a measure are then finite sums over its nodes, and a
subset is any vectorised predicate ``subset(lam, k, l) -> bool array``; a
grid cell belongs to the subset iff its centre does.

Densities are vectorised callables ``f(lam, k, l)`` returning non-negative
values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .errors import ConditioningError, DomainError, NormalizationError
from .stats import total_variation

DEFAULT_CELLS = 4096
NORM_TOL = 1e-9

Density = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
Subset = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HiddenVariable:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"hidden variable {self.value} outside [0, 1]")


@dataclass(frozen=True, order=True)
class SettingPair:
    """Alice's choice ``k`` among X0, X1 and Bob's ``l`` among Y0, Y1."""

    k: int
    l: int

    def __post_init__(self):
        if self.k not in (0, 1) or self.l not in (0, 1):
            raise DomainError(f"setting indices must be binary, got ({self.k}, {self.l})")

    @property
    def index(self) -> int:
        return 2 * self.k + self.l

    def __iter__(self):
        return iter((self.k, self.l))


SETTING_PAIRS = tuple(SettingPair(k, l) for k in (0, 1) for l in (0, 1))


@dataclass(frozen=True)
class StateSpacePoint:
    lam: HiddenVariable
    settings: SettingPair


def _readonly(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True).reshape(-1)
    a.setflags(write=False)
    return a


def _grid_nodes(cells: int):
    centres = (np.arange(cells) + 0.5) / cells
    lam = np.tile(centres, 4)
    k = np.repeat([p.k for p in SETTING_PAIRS], cells)
    l = np.repeat([p.l for p in SETTING_PAIRS], cells)
    return lam, k, l


@dataclass(frozen=True, eq=False)
class Measure:
    kind: str
    lam: np.ndarray
    k: np.ndarray
    l: np.ndarray
    weights: np.ndarray
    cells: int | None = None
    subspace_weights: Mapping[Hashable, float] | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "atomic", "weighted-by-subspace"):
            raise DomainError(f"unknown measure kind {self.kind!r}")
        object.__setattr__(self, "lam", _readonly(self.lam, float))
        object.__setattr__(self, "k", _readonly(self.k, np.int8))
        object.__setattr__(self, "l", _readonly(self.l, np.int8))
        object.__setattr__(self, "weights", _readonly(self.weights, float))
        n = self.lam.size
        if not (self.k.size == self.l.size == self.weights.size == n):
            raise DomainError("node arrays have inconsistent lengths")
        if n and (np.any(self.lam < 0) or np.any(self.lam > 1)):
            raise DomainError("hidden variable outside [0, 1]")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise DomainError("measure weights must be finite and non-negative")
        if not self.total_mass > 0:
            raise NormalizationError("measure has zero total mass")

    # constructors

    @classmethod
    def uniform(cls, cells: int = DEFAULT_CELLS, setting_mass=None) -> "Measure":
        """Lebesgue measure on ``lam`` times a counting measure on setting pairs.

        ``setting_mass`` is a length-4 sequence indexed by ``SettingPair.index``;
        it defaults to 1/4 each so that the whole space has unit volume.
        """
        sm = np.full(4, 0.25) if setting_mass is None else np.asarray(setting_mass, float)
        if sm.shape != (4,):
            raise DomainError("setting_mass needs one entry per setting pair")
        lam, k, l = _grid_nodes(cells)
        return cls("uniform", lam, k, l, np.repeat(sm, cells) / cells, cells=cells)

    @classmethod
    def atomic(cls, lam, k, l, weights=None) -> "Measure":
        lam = np.asarray(lam, float)
        w = np.ones(lam.size) if weights is None else np.asarray(weights, float)
        return cls("atomic", lam, k, l, w)

    @classmethod
    def from_points(cls, points: Sequence[StateSpacePoint], weights=None) -> "Measure":
        lam = [p.lam.value for p in points]
        k = [p.settings.k for p in points]
        l = [p.settings.l for p in points]
        return cls.atomic(lam, k, l, weights)

    @classmethod
    def by_subspace(
        cls,
        subspace_weights: Mapping[Hashable, float],
        labeler: Callable[[np.ndarray, np.ndarray, np.ndarray], Sequence[Hashable]] | None = None,
        cells: int = DEFAULT_CELLS,
    ) -> "Measure":
        """Grid measure whose mass in each labelled subspace is scaled by its weight.

        ``labeler(lam, k, l)`` returns one label per node; by default the label
        is the node's ``SettingPair``. Labels missing from ``subspace_weights``
        get weight zero. The base volume of each setting pair is 1/4.
        """
        if any(w < 0 for w in subspace_weights.values()):
            raise DomainError("subspace weights must be non-negative")
        lam, k, l = _grid_nodes(cells)
        if labeler is None:
            labels = [SettingPair(int(a), int(b)) for a, b in zip(k, l)]
        else:
            labels = labeler(lam, k, l)
        w = np.array([subspace_weights.get(lab, 0.0) for lab in labels], dtype=float)
        return cls(
            "weighted-by-subspace", lam, k, l, w * 0.25 / cells,
            cells=cells, subspace_weights=dict(subspace_weights),
        )

    # queries

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def size(self) -> int:
        return int(self.lam.size)

    def same_domain(self, other: "Measure") -> bool:
        return self is other or (
            self.size == other.size
            and np.array_equal(self.lam, other.lam)
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.l, other.l)
        )

    def mask(self, subset: Subset | None) -> np.ndarray:
        if subset is None:
            return np.ones(self.size, dtype=bool)
        m = np.broadcast_to(np.asarray(subset(self.lam, self.k, self.l), dtype=bool), (self.size,))
        return m

    def restrict(self, mask: np.ndarray) -> "Measure":
        """Same nodes, mass zeroed outside ``mask``."""
        w = np.where(mask, self.weights, 0.0)
        if not w.sum() > 0:
            raise ConditioningError("restriction has zero mass")
        return Measure(self.kind, self.lam, self.k, self.l, w, cells=self.cells,
                       subspace_weights=self.subspace_weights)

    def measure_of(self, subset: Subset | None) -> float:
        return float(np.sum(self.weights[self.mask(subset)]))


def _evaluate(density: Density, measure: Measure) -> np.ndarray:
    vals = np.asarray(density(measure.lam, measure.k, measure.l), dtype=float)
    vals = np.array(np.broadcast_to(vals, (measure.size,)))
    if not np.all(np.isfinite(vals)):
        raise NormalizationError("density is not finite on the support")
    if np.any(vals < 0):
        raise NormalizationError("density takes negative values")
    return vals


@dataclass(frozen=True, eq=False)
class Distribution:
    """A probability density with respect to ``measure``.

    ``density`` is the raw (possibly unnormalised) function; calling the
    distribution divides by ``normalizer``.
    """

    density: Density
    normalizer: float
    measure: Measure
    node_values: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not self.normalizer > 0:
            raise NormalizationError("normalizer must be positive")
        if self.node_values is None:
            vals = _evaluate(self.density, self.measure) / self.normalizer
        else:
            vals = np.asarray(self.node_values, float)
        object.__setattr__(self, "node_values", _readonly(vals, float))

    def __call__(self, lam, k, l):
        return np.asarray(self.density(lam, k, l), dtype=float) / self.normalizer

    def integral(self) -> float:
        return float(np.sum(self.node_values * self.measure.weights))

    def lambda_masses(self) -> tuple[np.ndarray, np.ndarray]:
        return _group_by_lambda(self.measure.lam, self.node_values * self.measure.weights)


def normalize(density: Density, measure: Measure) -> Distribution:
    vals = _evaluate(density, measure)
    z = float(np.sum(vals * measure.weights))
    if not z > 0:
        raise NormalizationError("density has zero total mass against the measure")
    dist = Distribution(density, z, measure, node_values=vals / z)
    if abs(dist.integral() - 1.0) > NORM_TOL:
        raise NormalizationError(f"normalization failed: integral {dist.integral()!r}")
    return dist


@dataclass(frozen=True, eq=False)
class BellDensity:
    """The measure-weighted density ``rho * mu``; its node masses sum to one."""

    distribution: Distribution
    measure: Measure

    def __post_init__(self):
        if not self.measure.same_domain(self.distribution.measure):
            raise DomainError("distribution and measure live on different spaces")
        if abs(self.total() - 1.0) > NORM_TOL:
            raise NormalizationError(
                f"distribution is not normalized against this measure (integral {self.total()!r})"
            )

    @property
    def masses(self) -> np.ndarray:
        return self.distribution.node_values * self.measure.weights

    def total(self) -> float:
        return float(np.sum(self.masses))


def bell_density(rho: Distribution, mu: Measure) -> BellDensity:
    if not mu.same_domain(rho.measure):
        raise DomainError("distribution and measure live on different spaces")
    vals = _evaluate(rho.density, mu) / rho.normalizer
    rho_on_mu = Distribution(rho.density, rho.normalizer, mu, node_values=vals)
    return BellDensity(rho_on_mu, mu)


def probability(bd: BellDensity, subset: Subset | None = None) -> float:
    m = bd.measure.mask(subset)
    p = float(np.sum(bd.masses[m]))
    return min(max(p, 0.0), 1.0)


def conditional(bd: BellDensity, settings: SettingPair) -> Distribution:
    """``rho_Bell(lam | settings)`` as a distribution on the restricted measure."""
    settings = SettingPair(*settings)
    mask = (bd.measure.k == settings.k) & (bd.measure.l == settings.l)
    p = float(np.sum(bd.masses[mask]))
    if not p > 0:
        raise ConditioningError(f"settings {tuple(settings)} have probability zero")
    restricted = bd.measure.restrict(mask)
    vals = np.where(mask, bd.distribution.node_values / p, 0.0)
    rho = bd.distribution
    return Distribution(rho.density, rho.normalizer * p, restricted, node_values=vals)


def setting_probabilities(bd: BellDensity) -> dict[SettingPair, float]:
    m = bd.masses
    return {
        s: float(np.sum(m[(bd.measure.k == s.k) & (bd.measure.l == s.l)]))
        for s in SETTING_PAIRS
    }


def _group_by_lambda(lam: np.ndarray, mass: np.ndarray):
    values, inverse = np.unique(lam, return_inverse=True)
    return values, np.bincount(inverse, weights=mass, minlength=values.size)


def lambda_marginal(bd: BellDensity) -> tuple[np.ndarray, np.ndarray]:
    return _group_by_lambda(bd.measure.lam, bd.masses)


def si_distance(bd: BellDensity) -> float:
    """Largest total-variation distance between ``lam | settings`` and the ``lam`` marginal.

    Zero (up to rounding) exactly when the Bell density satisfies statistical
    independence. Settings of probability zero are skipped.
    """
    values, marginal = lambda_marginal(bd)
    worst = 0.0
    for s, ps in setting_probabilities(bd).items():
        if ps <= 0:
            continue
        v, cond = conditional(bd, s).lambda_masses()
        if not np.array_equal(v, values):  # pragma: no cover - same nodes by construction
            raise DomainError("conditional and marginal are supported on different nodes")
        worst = max(worst, total_variation(cond / cond.sum(), marginal / marginal.sum()))
    return worst


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle ``lo <= lam < hi`` over a set of setting pairs.

    The upper edge is closed when ``hi >= 1`` so that boxes can tile the
    whole space. ``settings=None`` means every setting pair.
    """

    lo: float
    hi: float
    settings: frozenset[SettingPair] | None = None

    def __call__(self, lam, k, l):
        lam = np.asarray(lam)
        inside = (lam >= self.lo) & ((lam < self.hi) | (self.hi >= 1.0))
        if self.settings is not None:
            idx = 2 * np.asarray(k) + np.asarray(l)
            inside &= np.isin(idx, [s.index for s in self.settings])
        return inside


def rectangle_grid(lambda_bins: int = 25) -> list[Box]:
    """``lambda_bins`` equal intervals crossed with the four setting pairs."""
    edges = np.linspace(0.0, 1.0, lambda_bins + 1)
    return [
        Box(float(lo), float(hi), frozenset([s]))
        for s in SETTING_PAIRS
        for lo, hi in zip(edges[:-1], edges[1:])
    ]
