"""Supermeasured hidden-variable model for the CHSH experiment.

The hidden-variable space is split into sixteen disjoint subspaces, one per
combination of outcomes ``(i, j)`` and settings ``(k, l)``. A hidden variable
is a pair ``(u, label)``: ``u`` is uniform on ``[0, 1]`` in every subspace
(the distribution carries no setting information), while the label fixes
both outcomes and the single setting pair at which the variable is physical.
The subspace measures are the quantum probabilities, normalised per setting
pair, which is all it takes to reproduce the quantum correlations.

Outcome cells are indexed ``0..3`` in the order ``(++, +-, -+, --)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _rng
from .errors import (
    CounterfactualError,
    DomainError,
    EnsembleSetError,
    InsufficientDataError,
    ModelError,
)
from .measure import SETTING_PAIRS, BellDensity, Measure, SettingPair, bell_density, normalize
from .quantum import OUTCOME_PAIRS, TwoQubitState, outcome_probabilities
from .sampling import SampledSpace, pairwise_ks
from .stats import TestReport, total_variation

# Y0 = -pi/4 puts the single minus sign of S on E(X1, Y0); S = -2 sqrt(2) for the singlet.
OPTIMAL_ANGLES = (0.0, math.pi / 2, -math.pi / 4, math.pi / 4)

_OUT_A = np.array([a for a, _ in OUTCOME_PAIRS], dtype=np.int8)
_OUT_B = np.array([b for _, b in OUTCOME_PAIRS], dtype=np.int8)

ENSEMBLE_CSV_HEADER = ("u", "outcome_a", "outcome_b", "k", "l")


@dataclass(frozen=True, order=True)
class SubspaceLabel:
    outcome_a: int
    outcome_b: int
    setting_k: int
    setting_l: int

    def __post_init__(self):
        if self.outcome_a not in (1, -1) or self.outcome_b not in (1, -1):
            raise DomainError("outcomes must be +1 or -1")
        SettingPair(self.setting_k, self.setting_l)

    @property
    def settings(self) -> SettingPair:
        return SettingPair(self.setting_k, self.setting_l)

    @property
    def cell(self) -> int:
        return OUTCOME_PAIRS.index((self.outcome_a, self.outcome_b))

    @property
    def index(self) -> int:
        """Position among all 16 labels: ``4 * settings.index + cell``."""
        return 4 * self.settings.index + self.cell

    @classmethod
    def from_index(cls, index: int) -> "SubspaceLabel":
        s, cell = divmod(index, 4)
        a, b = OUTCOME_PAIRS[cell]
        pair = SETTING_PAIRS[s]
        return cls(a, b, pair.k, pair.l)

    def __str__(self):
        sign = {1: "+", -1: "-"}
        return f"L^{sign[self.outcome_a]}{sign[self.outcome_b]}_{self.setting_k}{self.setting_l}"


ALL_LABELS = tuple(SubspaceLabel.from_index(i) for i in range(16))


@dataclass(frozen=True, eq=False)
class SupermeasuredModel:
    """Setting angles ``(X0, X1, Y0, Y1)`` and a ``(2, 2, 4)`` weight table.

    ``weights[k, l, cell]`` is the measure of the subspace with outcomes
    ``OUTCOME_PAIRS[cell]`` at settings ``(X_k, Y_l)``.
    """

    angles: tuple[float, float, float, float]
    weights: np.ndarray
    state: TwoQubitState | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (2, 2, 4):
            raise ModelError(f"weight table must have shape (2, 2, 4), got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ModelError("weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    def weight(self, label: SubspaceLabel) -> float:
        return float(self.weights[label.setting_k, label.setting_l, label.cell])

    def weights_for(self, settings) -> np.ndarray:
        k, l = settings
        return self.weights[k, l]

    def weight_map(self) -> dict[SubspaceLabel, float]:
        return {lab: self.weight(lab) for lab in ALL_LABELS}

    def setting_angles(self, settings) -> tuple[float, float]:
        k, l = settings
        return self.angles[k], self.angles[2 + l]


def build_model(angles: Sequence[float], state: TwoQubitState | None = None) -> SupermeasuredModel:
    if len(angles) != 4:
        raise DomainError("need four angles (X0, X1, Y0, Y1)")
    if state is None:
        state = TwoQubitState.singlet()
    elif not isinstance(state, TwoQubitState):
        state = TwoQubitState(state)
    x, y = np.meshgrid(angles[:2], angles[2:], indexing="ij")
    w = outcome_probabilities(state, x, y)
    return SupermeasuredModel(tuple(angles), w, state)


@dataclass(frozen=True)
class HiddenVariableDraw:
    u: float
    label: SubspaceLabel

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise DomainError(f"u={self.u} outside [0, 1]")


def outcome(draw: HiddenVariableDraw, side: str, setting_index: int) -> int:
    """Deterministic local outcome ``A(lam, X_k)`` or ``B(lam, Y_l)``.

    Raises CounterfactualError when the queried setting is not the one at
    which this hidden variable is physical: such a point has measure zero.
    """
    side = side.upper()
    if side == "A":
        if setting_index != draw.label.setting_k:
            raise CounterfactualError(
                f"{draw.label} is not physical for Alice's setting X{setting_index}"
            )
        return draw.label.outcome_a
    if side == "B":
        if setting_index != draw.label.setting_l:
            raise CounterfactualError(
                f"{draw.label} is not physical for Bob's setting Y{setting_index}"
            )
        return draw.label.outcome_b
    raise DomainError(f"side must be 'A' or 'B', got {side!r}")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Draws sampled at one setting pair: uniform ``u`` values and outcome cells."""

    u: np.ndarray
    cells: np.ndarray
    setting_pair: SettingPair
    seed: int = 0

    def __post_init__(self):
        u = np.array(self.u, dtype=float).reshape(-1)
        c = np.array(self.cells, dtype=np.int8).reshape(-1)
        if u.size != c.size:
            raise DomainError("u and cells must have equal length")
        if np.any((c < 0) | (c > 3)):
            raise DomainError("outcome cells must lie in 0..3")
        u.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "cells", c)
        object.__setattr__(self, "setting_pair", SettingPair(*self.setting_pair))

    def __len__(self):
        return int(self.u.size)

    @property
    def outcomes_a(self) -> np.ndarray:
        return _OUT_A[self.cells]

    @property
    def outcomes_b(self) -> np.ndarray:
        return _OUT_B[self.cells]

    def draw(self, i: int) -> HiddenVariableDraw:
        a, b = OUTCOME_PAIRS[int(self.cells[i])]
        s = self.setting_pair
        return HiddenVariableDraw(float(self.u[i]), SubspaceLabel(a, b, s.k, s.l))

    def __iter__(self):
        return (self.draw(i) for i in range(len(self)))

    def cell_counts(self) -> np.ndarray:
        return np.bincount(self.cells, minlength=4)

    def to_csv(self, path) -> None:
        k, l = self.setting_pair
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ENSEMBLE_CSV_HEADER)
            for u, a, b in zip(self.u, self.outcomes_a, self.outcomes_b):
                w.writerow((repr(float(u)), int(a), int(b), k, l))

    @classmethod
    def from_csv(cls, path, seed: int = 0) -> "Ensemble":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = tuple(next(r))
            if header != ENSEMBLE_CSV_HEADER:
                raise DomainError(f"unexpected CSV header {header}")
            rows = [(float(u), int(a), int(b), int(k), int(l)) for u, a, b, k, l in r]
        if not rows:
            raise InsufficientDataError(f"{path} holds no draws")
        pairs = {(k, l) for *_, k, l in rows}
        if len(pairs) != 1:
            raise EnsembleSetError("an ensemble file must hold a single setting pair")
        u = np.array([r[0] for r in rows])
        cells = np.array([OUTCOME_PAIRS.index((r[1], r[2])) for r in rows])
        return cls(u, cells, SettingPair(*pairs.pop()), seed)


def sample_ensemble(
    model: SupermeasuredModel, setting_pair, n: int, seed: int, workers: int = 1
) -> Ensemble:
    """``n`` uniform hidden variables assigned to outcome cells in proportion to the weights."""
    pair = SettingPair(*setting_pair)
    if n < 1:
        raise InsufficientDataError("an ensemble needs at least one draw")
    w = model.weights_for(pair)
    total = w.sum()
    if not total > 0:
        raise ModelError(f"all weights vanish for settings {tuple(pair)}")
    cdf = np.cumsum(w) / total
    cdf[int(np.flatnonzero(w)[-1]):] = 1.0

    label = f"ensemble/k{pair.k}l{pair.l}"

    def chunk(i, size):
        rng = _rng.derive_rng(seed, label, i)
        u = rng.random(size)
        cells = np.searchsorted(cdf, rng.random(size), side="right").astype(np.int8)
        return u, cells

    parts = _rng.run_chunks(chunk, _rng.chunk_sizes(n), workers)
    return Ensemble(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        pair,
        seed,
    )


def estimate_expectation(e: Ensemble) -> float:
    """Sample mean of ``A * B``; exact integer accumulation before the final division."""
    if len(e) == 0:
        raise InsufficientDataError("empty ensemble")
    counts = e.cell_counts()
    same = int(counts[0] + counts[3])
    return (same - (len(e) - same)) / len(e)


def standard_error(e: Ensemble) -> float:
    m = estimate_expectation(e)
    return math.sqrt(max(1.0 - m * m, 0.0) / len(e))


def _by_pair(ensembles: Iterable[Ensemble]) -> dict[SettingPair, Ensemble]:
    ensembles = list(ensembles)
    pairs = [e.setting_pair for e in ensembles]
    if len(ensembles) != 4 or set(pairs) != set(SETTING_PAIRS):
        raise EnsembleSetError(
            f"need one ensemble for each of the four setting pairs, got {[tuple(p) for p in pairs]}"
        )
    return {e.setting_pair: e for e in ensembles}


def chsh_statistic(e00: Ensemble, e01: Ensemble, e10: Ensemble, e11: Ensemble) -> float:
    """S = E00 - E10 + E01 + E11, ensembles matched by their setting pairs."""
    by = _by_pair((e00, e01, e10, e11))
    E = {p: estimate_expectation(e) for p, e in by.items()}
    return (
        E[SettingPair(0, 0)] - E[SettingPair(1, 0)] + E[SettingPair(0, 1)] + E[SettingPair(1, 1)]
    )


def physical_si_test(
    e00: Ensemble, e01: Ensemble, e10: Ensemble, e11: Ensemble, alpha: float = 0.01
) -> TestReport:
    """Pairwise KS on the ``u`` marginals of the four ensembles, Bonferroni over six pairs.

    The report's p-value is the adjusted minimum; ``verdict`` is
    ``fail-to-reject`` when the data are consistent with physical SI.
    """
    by = _by_pair((e00, e01, e10, e11))
    for p, e in by.items():
        if len(e) == 0:
            raise InsufficientDataError(f"ensemble {tuple(p)} is empty")
    samples = {tuple(p): np.sort(e.u) for p, e in sorted(by.items())}
    return pairwise_ks(samples, alpha, "physical-si-ks-bonferroni")


def bell_si_violation(model: SupermeasuredModel, support: bool = False) -> float:
    """Largest total-variation distance between conditionals of rho_Bell at two setting pairs.

    By default the conditionals are compared over the four outcome cells.
    With ``support=True`` they are compared over all sixteen subspaces; as
    the subspaces of different setting pairs are disjoint this is 1 for
    every model.
    """
    dists = []
    for pair in SETTING_PAIRS:
        w = model.weights_for(pair)
        w = w / w.sum()
        if support:
            full = np.zeros(16)
            full[4 * pair.index: 4 * pair.index + 4] = w
            w = full
        dists.append(w)
    return max(
        total_variation(dists[i], dists[j]) for i in range(4) for j in range(i + 1, 4)
    )


def to_sampled_space(ensembles: Iterable[Ensemble]) -> SampledSpace:
    """Embed ``(u, label)`` into one real coordinate ``(cell + u) / 4``.

    Each outcome cell owns a quarter of ``[0, 1]``; conditioned on a setting
    pair the embedded coordinate is piecewise uniform with the quantum
    probabilities as the quarter masses. This is the space on which the
    Bell-SI audit sees the setting dependence, while ``u`` stays uniform.
    """
    ensembles = list(ensembles)
    lam, k, l = [], [], []
    for e in ensembles:
        lam.append((e.cells + e.u) / 4.0)
        k.append(np.full(len(e), e.setting_pair.k))
        l.append(np.full(len(e), e.setting_pair.l))
    seeds = {e.seed for e in ensembles}
    return SampledSpace(np.concatenate(lam), np.concatenate(k), np.concatenate(l),
                        seeds.pop() if len(seeds) == 1 else 0)


def model_bell_densities(model: SupermeasuredModel, cells: int = 4096) -> tuple[BellDensity, BellDensity]:
    """The model on the embedded grid, with the supermeasure and with the uniform measure.

    Returns ``(rho~ mu~, rho~ mu0)`` for the constant distribution ``rho~``.
    The first violates statistical independence, the second does not.
    """
    if cells % 4:
        raise DomainError("cells must be a multiple of 4")
    weights = {
        (p.k, p.l, c): 4.0 * float(model.weights_for(p)[c] / model.weights_for(p).sum())
        for p in SETTING_PAIRS
        for c in range(4)
    }

    def labeler(lam, k, l):
        cell = np.minimum((lam * 4).astype(int), 3)
        return list(zip(k.tolist(), l.tolist(), cell.tolist()))

    mu_tilde = Measure.by_subspace(weights, labeler, cells=cells)
    mu_0 = Measure.uniform(cells=cells)
    const = lambda lam, k, l: np.ones_like(lam)  # noqa: E731
    return (
        bell_density(normalize(const, mu_tilde), mu_tilde),
        bell_density(normalize(const, mu_0), mu_0),
    )


@dataclass
class ChshRun:
    """Everything produced by one four-ensemble CHSH experiment."""

    model: SupermeasuredModel
    ensembles: dict[SettingPair, Ensemble]
    seed: int
    n: int
    alpha: float = 0.01
    expectations: dict[SettingPair, float] = field(init=False)
    s_value: float = field(init=False)
    physical_si: TestReport = field(init=False)
    tv: float = field(init=False)

    def __post_init__(self):
        self.expectations = {p: estimate_expectation(e) for p, e in self.ensembles.items()}
        e = [self.ensembles[p] for p in SETTING_PAIRS]
        self.s_value = chsh_statistic(*e)
        self.physical_si = physical_si_test(*e, alpha=self.alpha)
        self.tv = bell_si_violation(self.model)

    def to_dict(self) -> dict:
        return {
            "angles": list(self.model.angles),
            "seed": self.seed,
            "n": self.n,
            "correlations": [
                {
                    "k": p.k,
                    "l": p.l,
                    "e": self.expectations[p],
                    "standard_error": standard_error(self.ensembles[p]),
                }
                for p in SETTING_PAIRS
            ],
            "s": self.s_value,
            "ks": self.physical_si.to_dict(),
            "bell_si_tv": self.tv,
        }


def run_chsh(
    angles: Sequence[float],
    n: int,
    seed: int,
    state: TwoQubitState | None = None,
    alpha: float = 0.01,
    workers: int = 1,
) -> ChshRun:
    model = build_model(angles, state)
    ensembles = {p: sample_ensemble(model, p, n, seed, workers) for p in SETTING_PAIRS}
    return ChshRun(model, ensembles, seed, n, alpha)
