"""Reference computations that share no code with the package.

Each oracle takes a deliberately different route to the same number: plain
loops instead of vectorised sorting, explicit operators instead of
eigenvector projections, high-precision floats instead of exact rationals.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 50

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def ecdf_distance(a, b) -> float:
    """sup |F_a - F_b| by sweeping every pooled point with plain loops."""
    best = 0.0
    for x in list(a) + list(b):
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def spin_projector(theta: float, sign: int) -> np.ndarray:
    return 0.5 * (_I + sign * (math.cos(theta) * _Z + math.sin(theta) * _X))


def projector_probabilities(psi, theta_a: float, theta_b: float) -> np.ndarray:
    """<psi| P_a (x) P_b |psi> for the four sign combinations (++, +-, -+, --)."""
    psi = np.asarray(psi, dtype=complex)
    out = []
    for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        op = np.kron(spin_projector(theta_a, sa), spin_projector(theta_b, sb))
        out.append(float(np.real(np.vdot(psi, op @ psi))))
    return np.array(out)


def operator_correlation(psi, theta_a: float, theta_b: float) -> float:
    psi = np.asarray(psi, dtype=complex)
    sa = math.cos(theta_a) * _Z + math.sin(theta_a) * _X
    sb = math.cos(theta_b) * _Z + math.sin(theta_b) * _X
    return float(np.real(np.vdot(psi, np.kron(sa, sb) @ psi)))


def singlet_cell_weights(theta_a: float, theta_b: float) -> np.ndarray:
    c = math.cos(theta_a - theta_b)
    return np.array([(1 - c) / 4, (1 + c) / 4, (1 + c) / 4, (1 - c) / 4])


def exact_chsh_tv(angles) -> float:
    """Largest TV between the four outcome-weight vectors of the singlet model."""
    x0, x1, y0, y1 = angles
    w = [singlet_cell_weights(x, y) for x in (x0, x1) for y in (y0, y1)]
    return max(0.5 * float(np.abs(w[i] - w[j]).sum()) for i in range(4) for j in range(i + 1, 4))


def mp_superposition(m1: int, n1: int, m2: int, n2: int, p: int):
    """|a+b|^2 and arg(a+b)/2pi of two C_p amplitudes at 50 digits."""
    a = mpmath.sqrt(mpmath.mpf(m1) / p) * mpmath.expjpi(mpmath.mpf(2 * n1) / p)
    b = mpmath.sqrt(mpmath.mpf(m2) / p) * mpmath.expjpi(mpmath.mpf(2 * n2) / p)
    z = a + b
    return abs(z) ** 2, (mpmath.arg(z) / (2 * mpmath.pi)) % 1, abs(z)


def mp_in_cp(m1: int, n1: int, m2: int, n2: int, p: int, tol=mpmath.mpf("1e-30")) -> bool:
    """Membership of a + b in C_p, decided numerically at 50 digits."""
    r2, turns, mod = mp_superposition(m1, n1, m2, n2, p)
    m = r2 * p
    if abs(m - mpmath.nint(m)) > tol or mpmath.nint(m) > p:
        return False
    if mod < tol:
        return True
    n = turns * p
    return bool(abs(n - mpmath.nint(n)) < tol or abs(n - p) < tol)


def mp_cos_turns(t: Fraction):
    return mpmath.cos(2 * mpmath.pi * mpmath.mpf(t.numerator) / t.denominator)


def binomial_sd(n: int, prob: float) -> float:
    """Standard deviation of k/n by summing over the whole binomial pmf."""
    from scipy.stats import binom

    k = np.arange(n + 1)
    pmf = binom.pmf(k, n, prob)
    mean = float(np.sum(pmf * k / n))
    return math.sqrt(float(np.sum(pmf * (k / n - mean) ** 2)))
