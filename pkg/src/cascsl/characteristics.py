"""Backward characteristic solvers.

Every solver maps an (n, 2) array of points at the new time level to their
foot points at the old level.  Analytic models (rotation, swirling flow)
come with their velocity formulas; field-driven models sample gridded data
with bilinear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import BoundaryKind, Grid2D

ROTATION_OMEGA = 0.5 * np.pi
SWIRLING_PERIOD = 2.0


@dataclass(frozen=True)
class TrajectoryOptions:
    substeps: int = 1

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def rotation_velocity(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rigid rotation about the origin with angular frequency pi/2."""
    return -ROTATION_OMEGA * y, ROTATION_OMEGA * x


def swirling_velocity(
    x: np.ndarray, y: np.ndarray, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Time-reversing swirling deformation flow (period T = 2)."""
    g = np.cos(np.pi * t / SWIRLING_PERIOD)
    ax = -2.0 * np.pi * np.cos(0.5 * x) ** 2 * np.sin(y) * g
    ay = 2.0 * np.pi * np.sin(x) * np.cos(0.5 * y) ** 2 * g
    return ax, ay


def backtrack_rotation(points: np.ndarray, dt: float) -> np.ndarray:
    """Exact backward rotation by -omega*dt about the origin."""
    ang = -ROTATION_OMEGA * dt
    c, s = np.cos(ang), np.sin(ang)
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([c * x - s * y, s * x + c * y])


def backtrack_swirling(
    points: np.ndarray, t_new: float, dt: float, substeps: int = 1
) -> np.ndarray:
    """RK4 integration of the swirling flow backward from t_new to
    t_new - dt; temporal error O((dt/substeps)^4)."""
    x = points[:, 0].copy()
    y = points[:, 1].copy()
    h = -dt / substeps
    t = t_new
    for _ in range(substeps):
        k1x, k1y = swirling_velocity(x, y, t)
        k2x, k2y = swirling_velocity(x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h)
        k3x, k3y = swirling_velocity(x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h)
        k4x, k4y = swirling_velocity(x + h * k3x, y + h * k3y, t + h)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        t += h
    return np.column_stack([x, y])


class BilinearSampler2D:
    """Bilinear interpolation of cell-centered data; periodic wrap or
    clamped extrapolation per axis (clamping is the zero-bc fallback for
    points that leave the domain)."""

    def __init__(self, grid: Grid2D, data: np.ndarray):
        if data.shape != (grid.nx, grid.ny):
            raise ValueError(f"data shape {data.shape} != grid {(grid.nx, grid.ny)}")
        self.grid = grid
        self.data = data

    def _axis_index(
        self, pos: np.ndarray, lo: float, delta: float, n: int, periodic: bool
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = (pos - lo) / delta - 0.5
        i0 = np.floor(s).astype(np.int64)
        frac = s - i0
        if periodic:
            return i0 % n, (i0 + 1) % n, frac
        i0c = np.clip(i0, 0, n - 1)
        i1c = np.clip(i0 + 1, 0, n - 1)
        return i0c, i1c, np.clip(frac, 0.0, 1.0)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        g = self.grid
        i0, i1, fx = self._axis_index(x, g.x_min, g.dx, g.nx, g.bc_x is BoundaryKind.PERIODIC)
        j0, j1, fy = self._axis_index(y, g.y_min, g.dy, g.ny, g.bc_y is BoundaryKind.PERIODIC)
        d = self.data
        return (
            d[i0, j0] * (1 - fx) * (1 - fy)
            + d[i1, j0] * fx * (1 - fy)
            + d[i0, j1] * (1 - fx) * fy
            + d[i1, j1] * fx * fy
        )


VelocitySampler = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def backtrack_electrostatic(
    points: np.ndarray, velocity: VelocitySampler, dt: float
) -> np.ndarray:
    """Single backward RK2 (midpoint) step with a frozen-in-time velocity
    field, as used by the predictor-corrector loop."""
    x, y = points[:, 0], points[:, 1]
    ax, ay = velocity(x, y)
    xm = x - 0.5 * dt * ax
    ym = y - 0.5 * dt * ay
    axm, aym = velocity(xm, ym)
    return np.column_stack([x - dt * axm, y - dt * aym])


class LinearSampler1D:
    """Periodic linear interpolation of node data on a uniform 1D grid."""

    def __init__(self, x_min: float, dx: float, n: int, data: np.ndarray):
        self.x_min = x_min
        self.dx = dx
        self.n = n
        self.data = data

    def __call__(self, x: np.ndarray) -> np.ndarray:
        s = (x - self.x_min) / self.dx
        i0 = np.floor(s).astype(np.int64)
        frac = s - i0
        i0 %= self.n
        i1 = (i0 + 1) % self.n
        return self.data[i0] * (1 - frac) + self.data[i1] * frac


def backtrack_rvm(
    points: np.ndarray,
    ex: Callable[[np.ndarray], np.ndarray],
    a2: Callable[[np.ndarray], np.ndarray],
    grad_a2: Callable[[np.ndarray], np.ndarray],
    dt: float,
) -> np.ndarray:
    """Backward RK2 step in the (x, p) phase plane of the relativistic
    model: dx/dt = p/gamma, dp/dt = Ex - grad(a^2)/(2*gamma) with
    gamma = sqrt(1 + p^2 + a^2) at the sampled field time level."""

    def rhs(x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gamma = np.sqrt(1.0 + p * p + a2(x))
        return p / gamma, ex(x) - 0.5 * grad_a2(x) / gamma

    x, p = points[:, 0], points[:, 1]
    vx, vp = rhs(x, p)
    xm = x - 0.5 * dt * vx
    pm = p - 0.5 * dt * vp
    vxm, vpm = rhs(xm, pm)
    return np.column_stack([x - dt * vxm, p - dt * vpm])
