"""Two-qubit state-vector calculator for planar spin measurements.

Outcome ordering everywhere is ``(++, +-, -+, --)``: Alice's result first,
``+`` meaning +1. A measurement at analyzer angle ``theta`` projects onto the
eigenvectors of ``cos(theta) Z + sin(theta) X``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StateError

NORM_TOL = 1e-12

OUTCOME_PAIRS = ((+1, +1), (+1, -1), (-1, +1), (-1, -1))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Pure state in the basis |00>, |01>, |10>, |11>."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise StateError(f"expected 4 amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized: sum |a|^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def singlet(cls) -> "TwoQubitState":
        s = 1 / np.sqrt(2)
        return cls(np.array([0, s, -s, 0]))

    @classmethod
    def product(cls, a: int = 0, b: int = 0) -> "TwoQubitState":
        amps = np.zeros(4, dtype=complex)
        amps[2 * a + b] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "TwoQubitState":
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def normalized(cls, amplitudes) -> "TwoQubitState":
        v = np.asarray(amplitudes, dtype=complex)
        return cls(v / np.linalg.norm(v))

    def __eq__(self, other):
        if not isinstance(other, TwoQubitState):
            return NotImplemented
        return bool(np.array_equal(self.amplitudes, other.amplitudes))

    def __hash__(self):
        return hash(self.amplitudes.tobytes())


def _as_state(state) -> TwoQubitState:
    return state if isinstance(state, TwoQubitState) else TwoQubitState(state)


def _eigvecs(theta):
    """Rows are the +1 and -1 eigenvectors for analyzer angle(s) ``theta``."""
    c = np.cos(np.asarray(theta, dtype=float) / 2)
    s = np.sin(np.asarray(theta, dtype=float) / 2)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def outcome_probabilities(state, theta_a, theta_b) -> np.ndarray:
    """Probabilities of the four joint outcomes, ordered ``(++, +-, -+, --)``.

    Angles may be arrays of matching shape; the result then has a trailing
    axis of length 4.
    """
    psi = _as_state(state).amplitudes.reshape(2, 2)
    ea = _eigvecs(theta_a)
    eb = _eigvecs(theta_b)
    # <a_i b_j | psi> with real eigenvectors
    amp = np.einsum("...iu,...jv,uv->...ij", ea, eb, psi)
    probs = np.abs(amp) ** 2
    return probs.reshape(probs.shape[:-2] + (4,))


def correlation(state, theta_a, theta_b):
    p = outcome_probabilities(state, theta_a, theta_b)
    out = p[..., 0] - p[..., 1] - p[..., 2] + p[..., 3]
    return float(out) if np.ndim(out) == 0 else out


def chsh_value(state, x0: float, x1: float, y0: float, y1: float) -> float:
    """S = E(X0,Y0) - E(X1,Y0) + E(X0,Y1) + E(X1,Y1)."""
    e = correlation(state, np.array([x0, x1, x0, x1]), np.array([y0, y0, y1, y1]))
    return float(e[0] - e[1] + e[2] + e[3])


def singlet_probabilities(relative_angle: float) -> np.ndarray:
    """Closed form for the singlet: (1-cos)/4 for equal outcomes, (1+cos)/4 otherwise."""
    c = np.cos(relative_angle)
    return np.array([(1 - c) / 4, (1 + c) / 4, (1 + c) / 4, (1 - c) / 4])
