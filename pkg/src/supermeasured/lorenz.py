"""Lorenz system: fixed-step RK4 trajectories and their occupancy measures.

The occupancy measure of a trajectory is the fraction of (post-transient)
samples falling in each cell of a box partition. For chaotic parameters it
converges to the invariant measure of the attractor, independently of where
the trajectory started.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from ._rng import derive_rng
from .errors import DivergenceError, DomainError, InsufficientDataError
from .stats import total_variation

MAX_DT = 0.05
TRANSIENT_FRACTION = 0.1


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    r: float = 28.0
    beta: float = 8.0 / 3.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.sigma, self.r, self.beta)):
            raise DomainError("Lorenz parameters must be finite")
        if self.beta <= 0:
            raise DomainError("beta must be positive")

    def fixed_point(self) -> tuple[float, float, float]:
        """The equilibrium ``(sqrt(beta (r-1)), sqrt(beta (r-1)), r-1)``; needs ``r > 1``."""
        if self.r <= 1:
            raise DomainError("non-trivial fixed points exist only for r > 1")
        c = math.sqrt(self.beta * (self.r - 1))
        return c, c, self.r - 1


CHAOTIC = LorenzParams(10.0, 28.0, 8.0 / 3.0)


@numba.njit(cache=True)
def _rk4(sigma, r, beta, x0, y0, z0, dt, steps, out):
    x, y, z = x0, y0, z0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    for i in range(1, steps + 1):
        k1x = sigma * (y - x)
        k1y = x * (r - z) - y
        k1z = x * y - beta * z
        xa = x + 0.5 * dt * k1x
        ya = y + 0.5 * dt * k1y
        za = z + 0.5 * dt * k1z
        k2x = sigma * (ya - xa)
        k2y = xa * (r - za) - ya
        k2z = xa * ya - beta * za
        xb = x + 0.5 * dt * k2x
        yb = y + 0.5 * dt * k2y
        zb = z + 0.5 * dt * k2z
        k3x = sigma * (yb - xb)
        k3y = xb * (r - zb) - yb
        k3z = xb * yb - beta * zb
        xc = x + dt * k3x
        yc = y + dt * k3y
        zc = z + dt * k3z
        k4x = sigma * (yc - xc)
        k4y = xc * (r - zc) - yc
        k4z = xc * yc - beta * zc
        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z = z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            return i
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
    return -1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``(X, Y, Z)`` at times ``t = i * dt`` for ``i = 0..steps``."""

    states: np.ndarray
    dt: float

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.states)) * self.dt

    def __len__(self):
        return len(self.states)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "x", "y", "z"))
            for t, (x, y, z) in zip(self.t, self.states):
                w.writerow((repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z))))


def integrate(params: LorenzParams, initial, dt: float, steps: int) -> Trajectory:
    if not 0 < dt <= MAX_DT:
        raise DomainError(f"dt must lie in (0, {MAX_DT}]")
    if steps < 1:
        raise DomainError("steps must be at least 1")
    x0, y0, z0 = (float(v) for v in initial)
    out = np.empty((steps + 1, 3))
    bad = _rk4(params.sigma, params.r, params.beta, x0, y0, z0, float(dt), int(steps), out)
    if bad >= 0:
        raise DivergenceError(f"state became non-finite at step {bad}")
    out.setflags(write=False)
    return Trajectory(out, float(dt))


@dataclass(frozen=True)
class BoxGrid:
    """Regular partition of the box ``[lo, hi]`` into ``bins`` cells per axis.

    Points outside the box are counted in the nearest boundary cell.
    """

    lo: tuple[float, float, float] = (-25.0, -35.0, -5.0)
    hi: tuple[float, float, float] = (25.0, 35.0, 55.0)
    bins: int = 32

    def __post_init__(self):
        if self.bins < 1 or any(h <= l for l, h in zip(self.lo, self.hi)):
            raise DomainError("invalid box grid")

    def cell_indices(self, states: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        width = (np.asarray(self.hi) - lo) / self.bins
        idx = np.floor((states - lo) / width).astype(np.int64)
        return np.clip(idx, 0, self.bins - 1)


def occupancy_measure(traj: Trajectory, grid: BoxGrid | None = None, transient: int | None = None) -> np.ndarray:
    """Normalized ``(bins, bins, bins)`` histogram of the samples after ``transient``.

    ``transient`` defaults to the first 10% of the samples.
    """
    grid = BoxGrid() if grid is None else grid
    if transient is None:
        transient = int(TRANSIENT_FRACTION * len(traj))
    seg = traj.states[transient:]
    if len(seg) == 0:
        raise InsufficientDataError("no samples left after the transient")
    idx = grid.cell_indices(seg)
    b = grid.bins
    flat = (idx[:, 0] * b + idx[:, 1]) * b + idx[:, 2]
    hist = np.bincount(flat, minlength=b**3).astype(float) / len(seg)
    return hist.reshape(b, b, b)


def histogram_tv(h1: np.ndarray, h2: np.ndarray) -> float:
    return total_variation(h1.ravel(), h2.ravel())


def write_histogram_csv(hist: np.ndarray, path) -> None:
    """Non-empty cells only, as ``ix,iy,iz,mass``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("ix", "iy", "iz", "mass"))
        for ix, iy, iz in zip(*np.nonzero(hist)):
            w.writerow((int(ix), int(iy), int(iz), repr(float(hist[ix, iy, iz]))))


def half_split_tv(traj: Trajectory, grid: BoxGrid | None = None, transient: int | None = None) -> float:
    """TV distance between occupancy measures of the two halves of the post-transient segment."""
    if transient is None:
        transient = int(TRANSIENT_FRACTION * len(traj))
    n = len(traj) - transient
    if n < 2:
        raise InsufficientDataError("need at least two post-transient samples")
    mid = transient + n // 2
    first = Trajectory(traj.states[transient:mid], traj.dt)
    second = Trajectory(traj.states[mid:transient + 2 * (n // 2)], traj.dt)
    return histogram_tv(occupancy_measure(first, grid, 0), occupancy_measure(second, grid, 0))


@dataclass(frozen=True)
class WitnessReport:
    initial_a: tuple[float, float, float]
    initial_b: tuple[float, float, float]
    tv: float
    threshold: float

    @property
    def indistinguishable(self) -> bool:
        return self.tv < self.threshold

    def to_dict(self) -> dict:
        return {
            "initial_a": list(self.initial_a),
            "initial_b": list(self.initial_b),
            "tv": self.tv,
            "threshold": self.threshold,
            "indistinguishable": self.indistinguishable,
        }


def off_attractor_witness(
    params: LorenzParams,
    dt: float,
    steps: int,
    perturbation: float,
    seed: int = 0,
    grid: BoxGrid | None = None,
    threshold: float = 0.05,
) -> WitnessReport:
    """Start two trajectories at independent uniform points of ``[-perturbation, perturbation]^3``
    and compare their occupancy measures.
    """
    if perturbation < 0:
        raise DomainError("perturbation must be non-negative")
    rng = derive_rng(seed, "lorenz/initial")
    a = tuple(float(v) for v in rng.uniform(-perturbation, perturbation, 3))
    b = tuple(float(v) for v in rng.uniform(-perturbation, perturbation, 3))
    ha = occupancy_measure(integrate(params, a, dt, steps), grid)
    hb = occupancy_measure(integrate(params, b, dt, steps), grid)
    return WitnessReport(a, b, histogram_tv(ha, hb), threshold)
