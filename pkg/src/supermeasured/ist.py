"""Exact arithmetic on the rational Hilbert space C_p.

An amplitude ``R e^{i phi}`` is admissible at resolution ``p`` when
``R^2 = m/p`` and ``phi = 2 pi n/p`` for integers ``0 <= m <= p`` and ``n``.
Angles are held as exact fractions of a full turn, magnitudes as
``fractions.Fraction``; nothing here touches floating point.

The rationality of cosines at rational angles is decided by Niven's
theorem: for ``phi/2pi = n/d`` in lowest terms, ``cos phi`` is rational iff
``d`` is 1, 2, 3, 4 or 6.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import DomainError

NIVEN_DENOMINATORS = frozenset({1, 2, 3, 4, 6})

# cos(2 pi t) for every turn fraction t in [0, 1) where it is rational
NIVEN_TABLE: dict[Fraction, Fraction] = {
    Fraction(0): Fraction(1),
    Fraction(1, 6): Fraction(1, 2),
    Fraction(1, 4): Fraction(0),
    Fraction(1, 3): Fraction(-1, 2),
    Fraction(1, 2): Fraction(-1),
    Fraction(2, 3): Fraction(-1, 2),
    Fraction(3, 4): Fraction(0),
    Fraction(5, 6): Fraction(1, 2),
}

DEFAULT_P = 2**8
MAX_P = 2**20


class Verdict(NamedTuple):
    ok: bool
    reason: str

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, order=True)
class RationalAngle:
    """The angle ``2 pi * numerator / denominator``, reduced into ``[0, 1)`` turns."""

    numerator: int
    denominator: int = 1

    def __post_init__(self):
        if self.denominator <= 0:
            raise DomainError("denominator must be positive")
        t = Fraction(self.numerator, self.denominator) % 1
        object.__setattr__(self, "numerator", t.numerator)
        object.__setattr__(self, "denominator", t.denominator)

    @classmethod
    def from_turns(cls, turns) -> "RationalAngle":
        t = Fraction(turns)
        return cls(t.numerator, t.denominator)

    @classmethod
    def parse(cls, text: str) -> "RationalAngle":
        """Parse ``"n/d"`` or an integer as a fraction of a full turn."""
        try:
            return cls.from_turns(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse {text!r} as a rational angle") from exc

    @property
    def turns(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def radians(self) -> float:
        return 2 * math.pi * self.numerator / self.denominator

    def __add__(self, other: "RationalAngle") -> "RationalAngle":
        return RationalAngle.from_turns(self.turns + other.turns)

    def __sub__(self, other: "RationalAngle") -> "RationalAngle":
        return RationalAngle.from_turns(self.turns - other.turns)

    def __neg__(self) -> "RationalAngle":
        return RationalAngle.from_turns(-self.turns)

    def is_multiple_of(self, p: int) -> bool:
        """True when the angle is ``2 pi n / p`` for an integer ``n``."""
        return p % self.denominator == 0

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class RationalAmplitude:
    """``R e^{i phi}`` with ``R^2 = m/p`` and ``phi`` a multiple of ``2 pi / p``."""

    m: int
    phase: RationalAngle
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise DomainError("p must be a positive integer")
        if not 0 <= self.m <= self.p:
            raise DomainError(f"m={self.m} outside [0, {self.p}]")
        if not self.phase.is_multiple_of(self.p):
            raise DomainError(f"phase {self.phase} is not a multiple of 2pi/{self.p}")

    @classmethod
    def from_integers(cls, m: int, n: int, p: int) -> "RationalAmplitude":
        return cls(m, RationalAngle(n, p), p)

    @property
    def r_squared(self) -> Fraction:
        return Fraction(self.m, self.p)

    @property
    def n(self) -> int:
        return self.phase.numerator * (self.p // self.phase.denominator)


@dataclass(frozen=True)
class CpState:
    """A state ``sum_j a_j |A_j>`` with every ``a_j`` in C_p and ``sum m_j = p`` exactly."""

    amplitudes: tuple[RationalAmplitude, ...]

    def __post_init__(self):
        amps = tuple(self.amplitudes)
        if not amps:
            raise DomainError("a state needs at least one amplitude")
        ps = {a.p for a in amps}
        if len(ps) != 1:
            raise DomainError(f"amplitudes disagree on p: {sorted(ps)}")
        p = ps.pop()
        total = sum(a.m for a in amps)
        if total != p:
            raise DomainError(f"state is not normalized: sum m_j = {total} != p = {p}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_integers(cls, ms: Sequence[int], ns: Sequence[int], p: int) -> "CpState":
        if len(ms) != len(ns):
            raise DomainError("ms and ns must have equal length")
        return cls(tuple(RationalAmplitude.from_integers(m, n, p) for m, n in zip(ms, ns)))

    @property
    def p(self) -> int:
        return self.amplitudes[0].p

    @property
    def dimension(self) -> int:
        return len(self.amplitudes)

    def probabilities(self) -> tuple[Fraction, ...]:
        return tuple(a.r_squared for a in self.amplitudes)


def is_in_Cp(candidates: Iterable[tuple[Fraction, RationalAngle]], p: int) -> Verdict:
    """Check a list of ``(R^2, phase)`` pairs for membership of a normalized C_p state."""
    if p < 1:
        raise DomainError("p must be a positive integer")
    total = 0
    for i, (r2, phase) in enumerate(candidates):
        r2 = Fraction(r2)
        phase = phase if isinstance(phase, RationalAngle) else RationalAngle.from_turns(phase)
        if r2 < 0 or r2 > 1:
            return Verdict(False, f"amplitude {i}: R^2 = {r2} outside [0, 1]")
        scaled = r2 * p
        if scaled.denominator != 1:
            return Verdict(False, f"amplitude {i}: R^2 denominator does not divide p")
        if not phase.is_multiple_of(p):
            return Verdict(False, f"amplitude {i}: phase not a multiple of 2pi/p")
        total += scaled.numerator
    if total != p:
        return Verdict(False, f"not normalized: sum m = {total} != p = {p}")
    return Verdict(True, "all amplitudes admissible and sum m = p")


def niven_rational_cos(angle: RationalAngle) -> Fraction | None:
    """Exact ``cos`` of a rational angle when it is rational, else ``None``."""
    angle = angle if isinstance(angle, RationalAngle) else RationalAngle.from_turns(angle)
    if angle.denominator not in NIVEN_DENOMINATORS:
        return None
    return NIVEN_TABLE[angle.turns]


def _turn_of_cosine(c: Fraction, sin_sign: int) -> Fraction | None:
    """Inverse of the Niven table: the turn with ``cos = c`` and the given sine sign."""
    hits = [t for t, v in NIVEN_TABLE.items() if v == c]
    if not hits:
        return None
    for t in hits:
        s = 0 if t in (0, Fraction(1, 2)) else (1 if t < Fraction(1, 2) else -1)
        if s == sin_sign:
            return t
    return None  # pragma: no cover - the table is closed under reflection


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


class Superposition(NamedTuple):
    ok: bool
    reason: str
    r_squared: Fraction | None
    phase: RationalAngle | None

    def __bool__(self):
        return self.ok


def superpose(a: RationalAmplitude, b: RationalAmplitude) -> Superposition:
    """Exact magnitude and phase of ``a + b`` whenever they are rational.

    ``|a+b|^2 = R1^2 + R2^2 + 2 R1 R2 cos(dphi)``, so the sum is rational iff
    ``sqrt(m1 m2) cos(dphi)`` is. That needs ``cos^2(dphi)`` rational (Niven
    applied to ``2 dphi``) and ``m1 m2 cos^2(dphi)`` the square of a
    rational. A perfect-square ``m1 m2`` with rational cosine is the common
    case, but ``cos(dphi) = 0`` and the eighth- and twelfth-turn cosines
    ``+-sqrt(2)/2``, ``+-sqrt(3)/2`` can also cancel the square root.

    When the magnitude is rational, ``a + b = R1 e^{i phi1} (1 + t e^{i dphi})``
    with ``t cos(dphi)`` and ``(t sin(dphi))^2`` rational, so the bracket's
    phase ``alpha`` has rational ``cos(2 alpha)``; Niven's theorem on
    ``2 alpha`` plus the quadrant decides whether ``alpha`` is a rational angle.
    """
    if a.p != b.p:
        raise DomainError(f"amplitudes use different p ({a.p} vs {b.p})")
    p = a.p
    if b.m == 0:
        return Superposition(True, "zero addend", a.r_squared, a.phase)
    if a.m == 0:
        return Superposition(True, "zero addend", b.r_squared, b.phase)
    delta = b.phase - a.phase
    c2 = cos_squared(delta)
    root = None if c2 is None else _rational_sqrt(a.m * b.m * c2)
    if root is None:
        if not _is_square(a.m * b.m):
            return Superposition(False, "m1*m2 not a perfect square", None, None)
        return Superposition(False, "cos of the phase difference is irrational", None, None)
    # sqrt(m1 m2) cos(delta), exactly
    s = _cos_sign(delta.turns) * root
    r2 = a.r_squared + b.r_squared + 2 * s / p
    if r2 == 0:
        return Superposition(True, "amplitudes cancel", Fraction(0), RationalAngle(0))

    # bracket x + i y = 1 + t e^{i delta} with t^2 = m2/m1
    x = 1 + s / a.m
    y2 = Fraction(b.m, a.m) * (1 - c2)
    y_sign = _sin_sign(delta.turns)
    cos2 = (x * x - y2) / (x * x + y2)
    two_alpha = _turn_of_cosine(cos2, _sign(x) * y_sign)
    if two_alpha is None:
        return Superposition(False, "resultant phase is not a rational angle", r2, None)
    alpha = two_alpha / 2
    # choose the half-angle lying in the quadrant of (x, y)
    for cand in (alpha, alpha + Fraction(1, 2)):
        if _cos_sign(cand) == _sign(x) and _sin_sign(cand) == y_sign:
            alpha = cand
            break
    else:  # pragma: no cover - one of the two half-angles always matches
        raise AssertionError("no half-angle in the quadrant of the resultant")
    phase = a.phase + RationalAngle.from_turns(alpha)
    if (r2 * p).denominator != 1 or r2 > 1:
        return Superposition(False, "|a+b|^2 is not of the form m/p with m <= p", r2, phase)
    if not phase.is_multiple_of(p):
        return Superposition(False, "resultant phase not a multiple of 2pi/p", r2, phase)
    return Superposition(True, "superposition is in C_p", r2, phase)


def cos_squared(angle: RationalAngle) -> Fraction | None:
    """``cos^2 = (1 + cos 2 angle)/2`` exactly, or ``None`` when irrational."""
    c = niven_rational_cos(angle + angle)
    return None if c is None else (1 + c) / 2


def _rational_sqrt(q: Fraction) -> Fraction | None:
    q = Fraction(q)
    if q < 0 or not (_is_square(q.numerator) and _is_square(q.denominator)):
        return None
    return Fraction(math.isqrt(q.numerator), math.isqrt(q.denominator))


def _cos_sign(turns: Fraction) -> int:
    return _sin_sign(turns + Fraction(1, 4))


def _sin_sign(turns: Fraction) -> int:
    t = turns % 1
    if t in (0, Fraction(1, 2)):
        return 0
    return 1 if t < Fraction(1, 2) else -1


def superposition_in_Cp(a: RationalAmplitude, b: RationalAmplitude) -> Verdict:
    s = superpose(a, b)
    return Verdict(s.ok, s.reason)


def _closure_pairs_exhaustive(p: int) -> Iterator[tuple[RationalAmplitude, RationalAmplitude]]:
    amps = [RationalAmplitude.from_integers(m, n, p) for m in range(1, p) for n in range(p)]
    for a in amps:
        for b in amps:
            yield a, b


def closure_failure_rate(p: int, trials: int | None = None, seed: int = 0, exhaustive: bool = False) -> float:
    """Fraction of pairs of non-zero C_p amplitudes whose sum leaves C_p.

    Amplitudes are drawn uniformly from ``1 <= m <= p-1`` and
    ``0 <= n <= p-1``. With ``exhaustive=True`` every ordered pair is
    enumerated and ``trials``/``seed`` are ignored.
    """
    if exhaustive:
        if p < 2:
            raise DomainError("exhaustive enumeration needs p >= 2")
        fails = total = 0
        for a, b in _closure_pairs_exhaustive(p):
            total += 1
            fails += not superpose(a, b).ok
        return fails / total
    if p < 4:
        raise DomainError("sampled closure study needs p >= 4")
    if trials is None or trials < 1:
        raise DomainError("trials must be a positive integer")
    if p > MAX_P:
        raise DomainError(f"p above the supported maximum {MAX_P}")
    rng = random.Random(seed)
    fails = 0
    for _ in range(trials):
        a = RationalAmplitude.from_integers(rng.randrange(1, p), rng.randrange(p), p)
        b = RationalAmplitude.from_integers(rng.randrange(1, p), rng.randrange(p), p)
        fails += not superpose(a, b).ok
    return fails / trials


def half_angle_cos_squared(delta: RationalAngle) -> Fraction | None:
    """``cos^2(delta/2) = (1 + cos delta)/2`` exactly, or ``None`` if irrational."""
    c = niven_rational_cos(delta)
    return None if c is None else (1 + c) / 2


def admissible_setting_pair(
    lambda_phase: RationalAngle, x: RationalAngle, y: RationalAngle, p: int
) -> bool:
    """Whether the Born weight ``cos^2(delta/2)`` is ``m/p`` for ``delta = y - x + lambda_phase``."""
    if p < 1:
        raise DomainError("p must be a positive integer")
    c2 = half_angle_cos_squared(y - x + lambda_phase)
    return c2 is not None and (c2 * p).denominator == 1


@dataclass(frozen=True)
class ExclusivityReport:
    x0: RationalAngle
    y0: RationalAngle
    y1: RationalAngle
    p: int
    admissible_00: bool
    admissible_01: bool
    exceptional: bool

    @property
    def both_admissible(self) -> bool:
        return self.admissible_00 and self.admissible_01

    @property
    def holds(self) -> bool:
        """At most one of the two pairs is admissible, unless Y1 - Y0 is Niven-exceptional."""
        return not self.both_admissible or self.exceptional

    def to_dict(self) -> dict:
        return {
            "x0": str(self.x0), "y0": str(self.y0), "y1": str(self.y1), "p": self.p,
            "admissible_x0y0": self.admissible_00, "admissible_x0y1": self.admissible_01,
            "exceptional": self.exceptional, "holds": self.holds,
        }


def exclusivity_check(
    x0: RationalAngle, y0: RationalAngle, y1: RationalAngle, p: int,
    lambda_phase: RationalAngle = RationalAngle(0),
) -> ExclusivityReport:
    if y0 == y1:
        raise DomainError("exclusivity is about two distinct settings Y0 != Y1")
    return ExclusivityReport(
        x0, y0, y1, p,
        admissible_setting_pair(lambda_phase, x0, y0, p),
        admissible_setting_pair(lambda_phase, x0, y1, p),
        niven_rational_cos(y1 - y0) is not None,
    )


def reduced_fractions(max_denominator: int) -> Iterator[RationalAngle]:
    """Every reduced ``n/d`` in ``[0, 1)`` with ``d <= max_denominator``, ordered by ``d`` then ``n``."""
    for d in range(1, max_denominator + 1):
        for n in range(d):
            if math.gcd(n, d) == 1:
                yield RationalAngle(n, d)


@dataclass(frozen=True)
class ExclusivityScan:
    p: int
    max_denominator: int
    pairs_checked: int
    both_admissible: int
    violations: tuple[ExclusivityReport, ...]
    exceptional_denominators: frozenset[int]

    @property
    def holds(self) -> bool:
        return not self.violations


def exclusivity_scan(max_denominator: int, p: int, x0: RationalAngle = RationalAngle(0)) -> ExclusivityScan:
    """Check exclusivity for every pair ``Y0 != Y1`` of reduced fractions up to ``max_denominator``.

    Only relative angles matter, so ``X0`` is held fixed. The exceptional
    denominators reported are those of ``Y1 - Y0`` over pairs where both
    settings are admissible.
    """
    angles = list(reduced_fractions(max_denominator))
    adm = {y: admissible_setting_pair(RationalAngle(0), x0, y, p) for y in angles}
    checked = both = 0
    violations = []
    dens = set()
    for y0 in angles:
        for y1 in angles:
            if y0 == y1:
                continue
            checked += 1
            if adm[y0] and adm[y1]:
                both += 1
                diff = y1 - y0
                dens.add(diff.denominator)
                if niven_rational_cos(diff) is None:
                    violations.append(ExclusivityReport(x0, y0, y1, p, True, True, False))
    return ExclusivityScan(p, max_denominator, checked, both, tuple(violations), frozenset(dens))


def niven_report_lines(max_denominator: int) -> Iterator[str]:
    """One line per reduced fraction: ``n/d -> rational value`` or ``n/d -> irrational``."""
    for a in reduced_fractions(max_denominator):
        c = niven_rational_cos(a)
        yield f"{a} -> irrational" if c is None else f"{a} -> rational {c}"


def nearest_admissible_probability(target: Fraction | float, p: int) -> Fraction:
    """The ``m/p`` (``0 <= m <= p``) closest to ``target``."""
    target = Fraction(target)
    m = min(max(round(target * p), 0), p)
    return Fraction(m, p)
