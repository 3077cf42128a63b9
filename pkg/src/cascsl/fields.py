"""Self-consistent field solvers.

Periodic Poisson problems are solved spectrally (zero-mean gauge); the
Dirichlet problem uses the 5-point cell-centered Laplacian with ghost
reflection across the walls and a cached sparse factorization.  The 1D
transverse Maxwell system of the relativistic model is advanced by a
staggered leapfrog.  Normalized units e = m = c = eps0 = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridError, NumericsError
from .grid import BoundaryKind, CellField, Grid2D


@dataclass(frozen=True)
class PotentialField:
    grid: Grid2D
    phi: np.ndarray  # (nx, ny) cell-centered


@dataclass(frozen=True)
class ElectricField2D:
    """Rotated gradient E_perp = (-dphi/dy, dphi/dx) on cell centers."""

    grid: Grid2D
    ex_perp: np.ndarray
    ey_perp: np.ndarray


@dataclass(frozen=True)
class SourceParams:
    """Modified Poisson source: k*f + eps*offset Gaussian."""

    k: float = 10.0
    eps: float = 0.8
    sigma: float = 0.1

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise GridError("sigma must be positive")


def poisson_periodic(rho: CellField) -> PotentialField:
    """Solve -lap(phi) = rho - mean(rho) spectrally with zero-mean phi."""
    grid = rho.grid
    if grid.bc_x is not BoundaryKind.PERIODIC or grid.bc_y is not BoundaryKind.PERIODIC:
        raise GridError("spectral Poisson solver needs periodic boundaries")
    kx = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    ky = 2.0 * np.pi * np.fft.fftfreq(grid.ny, d=grid.dy)
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    rho_hat = np.fft.fft2(rho.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = rho_hat / k2
    phi_hat[0, 0] = 0.0
    phi = np.real(np.fft.ifft2(phi_hat))
    return PotentialField(grid, phi)


_DIRICHLET_CACHE: dict[tuple, spla.SuperLU] = {}


def _dirichlet_operator(grid: Grid2D) -> spla.SuperLU:
    key = (grid.nx, grid.ny, grid.dx, grid.dy)
    lu = _DIRICHLET_CACHE.get(key)
    if lu is None:
        nx, ny = grid.nx, grid.ny
        ix2, iy2 = 1.0 / grid.dx**2, 1.0 / grid.dy**2
        # -laplacian with phi = 0 on walls via ghost reflection
        # (ghost = -first interior value)
        dx_main = 2.0 * np.ones(nx)
        dx_main[0] += 1.0
        dx_main[-1] += 1.0
        lap_x = sp.diags(
            [dx_main * ix2, -ix2 * np.ones(nx - 1), -ix2 * np.ones(nx - 1)],
            [0, 1, -1],
        )
        dy_main = 2.0 * np.ones(ny)
        dy_main[0] += 1.0
        dy_main[-1] += 1.0
        lap_y = sp.diags(
            [dy_main * iy2, -iy2 * np.ones(ny - 1), -iy2 * np.ones(ny - 1)],
            [0, 1, -1],
        )
        op = sp.kronsum(lap_y, lap_x).tocsc()  # acts on row-major (nx, ny)
        lu = spla.splu(op)
        _DIRICHLET_CACHE[key] = lu
    return lu


def poisson_dirichlet(rho: CellField) -> PotentialField:
    """Solve -lap(phi) = rho with phi = 0 on the domain boundary
    (cell-centered second-order discretization, direct sparse solve)."""
    grid = rho.grid
    lu = _dirichlet_operator(grid)
    phi = lu.solve(rho.values.ravel()).reshape(grid.nx, grid.ny)
    if not np.all(np.isfinite(phi)):
        raise NumericsError("Dirichlet Poisson solve produced non-finite values")
    return PotentialField(grid, phi)


def _ddx(phi: np.ndarray, grid: Grid2D) -> np.ndarray:
    if grid.bc_x is BoundaryKind.PERIODIC:
        return (np.roll(phi, -1, axis=0) - np.roll(phi, 1, axis=0)) / (2.0 * grid.dx)
    out = np.empty_like(phi)
    out[1:-1, :] = (phi[2:, :] - phi[:-2, :]) / (2.0 * grid.dx)
    # ghost reflection phi_ghost = -phi_edge (phi = 0 at the wall)
    out[0, :] = (phi[1, :] + phi[0, :]) / (2.0 * grid.dx)
    out[-1, :] = (-phi[-1, :] - phi[-2, :]) / (2.0 * grid.dx)
    return out


def _ddy(phi: np.ndarray, grid: Grid2D) -> np.ndarray:
    if grid.bc_y is BoundaryKind.PERIODIC:
        return (np.roll(phi, -1, axis=1) - np.roll(phi, 1, axis=1)) / (2.0 * grid.dy)
    out = np.empty_like(phi)
    out[:, 1:-1] = (phi[:, 2:] - phi[:, :-2]) / (2.0 * grid.dy)
    out[:, 0] = (phi[:, 1] + phi[:, 0]) / (2.0 * grid.dy)
    out[:, -1] = (-phi[:, -1] - phi[:, -2]) / (2.0 * grid.dy)
    return out


def e_perp_from_phi(pot: PotentialField) -> ElectricField2D:
    """Second-order central differences respecting the boundary rule."""
    grid = pot.grid
    return ElectricField2D(grid, -_ddy(pot.phi, grid), _ddx(pot.phi, grid))


def modified_source(fld: CellField, params: SourceParams) -> CellField:
    """k*f plus a fixed off-center Gaussian drive evaluated at cell
    centers (normalized coordinates x/lx, y/ly)."""
    grid = fld.grid
    x, y = grid.center_mesh()
    gx = (x - grid.x_min) / grid.lx - 0.5
    gy = (y - grid.y_min) / grid.ly - 0.5
    gauss = np.exp(-(gx**2 + gy**2) / (2.0 * params.sigma**2))
    return fld.with_values(params.k * fld.values + params.eps * gauss)


@dataclass(frozen=True)
class MaxwellState:
    """Transverse EM fields of the 1D relativistic model.

    ey/ez live at t - dt/2 relative to the integer-level by/bz/ay/az/ex;
    the `time` tag refers to the integer level.
    """

    ey: np.ndarray
    ez: np.ndarray
    by: np.ndarray
    bz: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    ex: np.ndarray
    omega_p: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        n = self.ey.shape[0]
        for name in ("ez", "by", "bz", "ay", "az", "ex"):
            if getattr(self, name).shape != (n,):
                raise GridError(f"Maxwell field {name} has inconsistent length")

    def a_squared(self) -> np.ndarray:
        return self.ay**2 + self.az**2


def _ddx_1d(arr: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(arr, -1) - np.roll(arr, 1)) / (2.0 * dx)


def maxwell_step(
    state: MaxwellState, rho_gamma: np.ndarray, dt: float, dx: float
) -> MaxwellState:
    """Leapfrog: E_perp advances dt (centered at the integer level, with
    the plasma-current source omega_p^2 * A * rho_gamma), then B advances
    from the new E, then A integrates dA/dt = -E with the time-centered E."""
    w2 = state.omega_p**2
    ey = state.ey + dt * (-_ddx_1d(state.bz, dx) + w2 * state.ay * rho_gamma)
    ez = state.ez + dt * (_ddx_1d(state.by, dx) + w2 * state.az * rho_gamma)
    by = state.by + dt * _ddx_1d(ez, dx)
    bz = state.bz - dt * _ddx_1d(ey, dx)
    ay = state.ay - dt * ey
    az = state.az - dt * ez
    return replace(
        state, ey=ey, ez=ez, by=by, bz=bz, ay=ay, az=az, time=state.time + dt
    )


def ex_update(
    mode: str,
    density: np.ndarray,
    current: np.ndarray,
    ex_prev: np.ndarray,
    dt: float,
    dx: float,
) -> np.ndarray:
    """Longitudinal field update.

    gauss: solve d(Ex)/dx = density - mean(density) spectrally (periodic,
    zero-mean gauge; the mean subtraction is the neutralizing ion
    background).  ampere: Ex <- Ex - dt*current with a midpoint-in-time
    current.
    """
    if mode == "ampere":
        return ex_prev - dt * current
    if mode == "gauss":
        n = density.shape[0]
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        rhs_hat = np.fft.fft(density - density.mean())
        with np.errstate(divide="ignore", invalid="ignore"):
            ex_hat = rhs_hat / (1j * k)
        ex_hat[0] = 0.0
        return np.real(np.fft.ifft(ex_hat))
    raise GridError(f"unknown ex mode: {mode!r}")


def gauss_residual(ex: np.ndarray, density: np.ndarray, dx: float) -> float:
    """Max-norm residual of d(Ex)/dx = density - mean(density)."""
    lhs = _ddx_1d(ex, dx)
    rhs = density - density.mean()
    return float(np.abs(lhs - rhs).max())
