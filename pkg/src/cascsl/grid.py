"""Uniform 2D tensor-product grids and cell-averaged fields.

Conventions used throughout the package:

* face ``i`` sits at ``x_min + i*dx`` for ``i = 0..nx``; cell ``i`` spans
  faces ``i`` and ``i+1`` and has its center at ``x_min + (i+1/2)*dx``,
* ``values[i, j]`` is the cell average over cell ``(i, j)`` (x index first),
* fields are immutable during a remap step; every update returns a new
  :class:`CellField` (double-buffer contract).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .errors import GridError, NumericsError


class BoundaryKind(str, Enum):
    """Ghost extension rule: periodic wrap or extension by zero."""

    PERIODIC = "periodic"
    ZERO = "zero"


@dataclass(frozen=True)
class Grid2D:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    dx: float
    dy: float
    bc_x: BoundaryKind
    bc_y: BoundaryKind

    @property
    def lx(self) -> float:
        return self.x_max - self.x_min

    @property
    def ly(self) -> float:
        return self.y_max - self.y_min

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def x_faces(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx + 1)

    def y_faces(self) -> np.ndarray:
        return self.y_min + self.dy * np.arange(self.ny + 1)

    def x_centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.nx) + 0.5)

    def y_centers(self) -> np.ndarray:
        return self.y_min + self.dy * (np.arange(self.ny) + 0.5)

    def center_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays of shape (nx, ny)."""
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="ij")

    def corner_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Face-corner coordinate arrays of shape (nx+1, ny+1)."""
        return np.meshgrid(self.x_faces(), self.y_faces(), indexing="ij")


def build_grid(
    x_min: float,
    x_max: float,
    y_min: float,
    y_max: float,
    nx: int,
    ny: int,
    bc_x: BoundaryKind = BoundaryKind.PERIODIC,
    bc_y: BoundaryKind = BoundaryKind.PERIODIC,
) -> Grid2D:
    """Construct a uniform grid; nx, ny >= 4 so degree-5 stencils fit."""
    if not (x_max > x_min and y_max > y_min):
        raise GridError(f"empty domain: [{x_min},{x_max}]x[{y_min},{y_max}]")
    if nx < 4 or ny < 4:
        raise GridError(f"grid too small for reconstruction stencils: {nx}x{ny}")
    bc_x = BoundaryKind(bc_x)
    bc_y = BoundaryKind(bc_y)
    dx = (x_max - x_min) / nx
    dy = (y_max - y_min) / ny
    return Grid2D(x_min, x_max, y_min, y_max, nx, ny, dx, dy, bc_x, bc_y)


@dataclass(frozen=True)
class CellField:
    """Cell-averaged density on a :class:`Grid2D` at a given time."""

    grid: Grid2D
    values: np.ndarray  # (nx, ny)
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise GridError(
                f"field shape {self.values.shape} does not match grid "
                f"{(self.grid.nx, self.grid.ny)}"
            )

    def check_finite(self) -> "CellField":
        if not np.all(np.isfinite(self.values)):
            raise NumericsError(f"non-finite cell averages at t={self.time}")
        return self

    def with_values(self, values: np.ndarray, time: float | None = None) -> "CellField":
        return replace(self, values=values, time=self.time if time is None else time)

    def total_mass(self) -> float:
        return float(self.values.sum()) * self.grid.cell_area


def init_cell_averages(
    grid: Grid2D,
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    quad_order: int = 4,
    time: float = 0.0,
) -> CellField:
    """Cell averages of a pointwise density by tensor Gauss-Legendre quadrature.

    Exact for densities that are polynomials of degree <= 2*quad_order - 1
    per axis.
    """
    if quad_order < 1:
        raise GridError("quadrature order must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    # map from [-1, 1] to offsets within a cell
    ox = 0.5 * grid.dx * nodes
    oy = 0.5 * grid.dy * nodes
    wx = 0.5 * weights  # relative weights; sum = 1 after pairing with 1/dx
    xc = grid.x_centers()
    yc = grid.y_centers()
    xq = (xc[:, None] + ox[None, :]).ravel()  # (nx*q,)
    yq = (yc[:, None] + oy[None, :]).ravel()  # (ny*q,)
    vals = density(xq[:, None], yq[None, :])
    vals = np.broadcast_to(vals, (xq.size, yq.size)).reshape(
        grid.nx, quad_order, grid.ny, quad_order
    )
    avg = np.einsum("iqjr,q,r->ij", vals, wx, wx)
    if not np.all(np.isfinite(avg)):
        raise NumericsError("density evaluated to non-finite values")
    return CellField(grid, np.ascontiguousarray(avg), time)


def write_field_csv(field: CellField, path: str) -> None:
    """Snapshot export: row-major CSV with header x_center,y_center,value."""
    x, y = field.grid.center_mesh()
    data = np.column_stack([x.ravel(), y.ravel(), field.values.ravel()])
    header = "x_center,y_center,value"
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def write_field_binary(field: CellField, path: str) -> None:
    """Raw snapshot: 16-byte header (nx, ny uint32, time float64), then
    little-endian float64 cell averages in row-major order."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IId", field.grid.nx, field.grid.ny, field.time))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field_binary(path: str) -> tuple[int, int, float, np.ndarray]:
    """Inverse of :func:`write_field_binary`; returns (nx, ny, time, values)."""
    with open(path, "rb") as fh:
        nx, ny, time = struct.unpack("<IId", fh.read(16))
        values = np.frombuffer(fh.read(), dtype="<f8").reshape(nx, ny)
    return nx, ny, time, values
