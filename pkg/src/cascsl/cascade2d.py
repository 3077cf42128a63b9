"""2D cascade remapping: column sweep, row sweep, and volume corrections.

The cascade decomposes the 2D conservative remap into a column-direction
remap onto intermediate cells followed by a row-direction remap onto the
backtracked cells.  The row sweep runs in the cumulative strip-volume
coordinate u (node spacing = intermediate-cell volume) whenever the x axis
is periodic: masses, limiter bounds, and cell volumes are then expressed in
one measure, so the freestream correction makes a uniform state an exact
fixed point and the limiter bounds translate into an exact maximum
principle after the correction pins every backtracked-cell volume to
dx*dy.

The freestream correction has two stages: the column stage shifts the
intermediate-cell boundaries so each horizontal layer of intermediate cells
has the exact total volume, and the row stage re-spaces the backtracked
faces uniformly in u from an anchor column.  Both stages preserve the
periodic wrap exactly, so mass conservation is untouched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dataclass_field, replace
from typing import Callable

import numpy as np

from .errors import GeometryError, OrderingError
from .grid import BoundaryKind, CellField, Grid2D
from .recon1d import (
    LimiterBounds,
    MassProfile,
    NO_BOUNDS,
    _barycentric,
    csl_remap,
    limited_remap,
)


@dataclass(frozen=True)
class CornerMap:
    """Backtracked positions of the half-grid corner points.

    xstar/ystar have shape (nx+1, ny+1); index [i, j] is the corner at
    (x_min + i*dx, y_min + j*dy).  xs_ext/ys_ext carry ghost_x extra face
    columns on each side (periodic images or extra backtracked points) used
    when interpolating the backtracked curves.
    """

    xstar: np.ndarray
    ystar: np.ndarray
    ghost_x: int
    xs_ext: np.ndarray
    ys_ext: np.ndarray


@dataclass(frozen=True)
class IntermediateLayout:
    """Intermediate-cell geometry of one cascade step.

    ytilde[i, j]: intersection ordinate of the backtracked curve of the
    line y = y_j with the grid line x = x_i, shape (nx+1, ny+1).
    ybar[i, j]: top/bottom boundaries of the intermediate cells (two-point
    averages of adjacent ytilde), shape (nx, ny+1).
    xbar[i, j]: averaged backtracked face abscissae used by the row sweep,
    shape (nx+1, ny).
    """

    ytilde: np.ndarray
    ybar: np.ndarray
    xbar: np.ndarray


@dataclass(frozen=True)
class CcslOptions:
    half_degree: int = 2
    freestream_correction: bool = False
    limiter: LimiterBounds = dataclass_field(default_factory=lambda: NO_BOUNDS)
    anchor_row: int | None = None
    anchor_col: int | None = None


@dataclass(frozen=True)
class ValidityReport:
    ratio_x: float
    ratio_y: float

    @property
    def ok(self) -> bool:
        return self.ratio_x < 1.0 and self.ratio_y < 1.0


def validity_check(
    ax: np.ndarray, ay: np.ndarray, grid: Grid2D, dt: float
) -> ValidityReport:
    """Grid-distortion guard: backtracked face ordering survives only if
    the velocity difference between adjacent samples times dt stays below
    one cell size per axis (checked against all adjacent pairs)."""

    def max_adjacent_diff(a: np.ndarray) -> float:
        cands = [np.abs(np.diff(a, axis=0)).max(initial=0.0),
                 np.abs(np.diff(a, axis=1)).max(initial=0.0)]
        if grid.bc_x is BoundaryKind.PERIODIC:
            cands.append(np.abs(a[0, :] - a[-1, :]).max(initial=0.0))
        if grid.bc_y is BoundaryKind.PERIODIC:
            cands.append(np.abs(a[:, 0] - a[:, -1]).max(initial=0.0))
        return float(max(cands))

    ratio_x = max_adjacent_diff(np.asarray(ax)) * dt / grid.dx
    ratio_y = max_adjacent_diff(np.asarray(ay)) * dt / grid.dy
    return ValidityReport(ratio_x, ratio_y)


def backtrack_corner_map(
    grid: Grid2D,
    backtrack: Callable[[np.ndarray], np.ndarray],
    half_degree: int = 2,
    margin_x: int | None = None,
) -> CornerMap:
    """Backtrack all corner points and assemble periodically consistent
    extended arrays.

    backtrack maps an (n, 2) array of points at t_{n+1} to their foot
    points at t_n.  Periodic edges/ghosts are built by shifting computed
    columns so the wrap is bit-exact; zero-bc ghosts are backtracked
    directly (the velocity model must be evaluable there).
    """
    nx, ny = grid.nx, grid.ny
    per_x = grid.bc_x is BoundaryKind.PERIODIC
    per_y = grid.bc_y is BoundaryKind.PERIODIC
    xf = grid.x_faces()
    yf = grid.y_faces()
    xi = xf[:-1] if per_x else xf
    yj = yf[:-1] if per_y else yf
    pts = np.column_stack([np.repeat(xi, yj.size), np.tile(yj, xi.size)])
    back = backtrack(pts)
    xs = np.empty((nx + 1, ny + 1))
    ys = np.empty((nx + 1, ny + 1))
    xs[: xi.size, : yj.size] = back[:, 0].reshape(xi.size, yj.size)
    ys[: xi.size, : yj.size] = back[:, 1].reshape(xi.size, yj.size)
    if per_x:
        xs[nx, : yj.size] = xs[0, : yj.size] + grid.lx
        ys[nx, : yj.size] = ys[0, : yj.size]
    if per_y:
        xs[:, ny] = xs[:, 0]
        ys[:, ny] = ys[:, 0] + grid.ly

    disp = float(np.abs(xs - xf[:, None]).max())
    if per_x and disp >= grid.lx:
        raise GeometryError(
            f"x displacement {disp:.3g} exceeds one period {grid.lx:.3g}"
        )
    if margin_x is None:
        margin_x = int(np.ceil(disp / grid.dx)) + half_degree + 3
    max_margin = nx if per_x else 4 * nx

    while True:
        margin_x = min(margin_x, max_margin)
        if per_x:
            left_x = xs[nx - margin_x : nx, :] - grid.lx
            left_y = ys[nx - margin_x : nx, :]
            right_x = xs[1 : margin_x + 1, :] + grid.lx
            right_y = ys[1 : margin_x + 1, :]
        else:
            gx = grid.x_min + grid.dx * np.arange(-margin_x, 0)
            gx2 = grid.x_max + grid.dx * np.arange(1, margin_x + 1)
            gpts = np.column_stack(
                [
                    np.repeat(np.concatenate([gx, gx2]), yf.size),
                    np.tile(yf, 2 * margin_x),
                ]
            )
            gback = backtrack(gpts)
            gxs = gback[:, 0].reshape(2 * margin_x, yf.size)
            gys = gback[:, 1].reshape(2 * margin_x, yf.size)
            left_x, right_x = gxs[:margin_x], gxs[margin_x:]
            left_y, right_y = gys[:margin_x], gys[margin_x:]

        xs_ext = np.concatenate([left_x, xs, right_x], axis=0)
        ys_ext = np.concatenate([left_y, ys, right_y], axis=0)
        # every interpolation target needs a full stencil inside the span
        pad = half_degree + 1
        covered = (
            float(xs_ext[pad, :].max()) <= grid.x_min
            and float(xs_ext[-(pad + 1), :].min()) >= grid.x_max
        )
        if covered or margin_x >= max_margin:
            if not covered:
                raise GeometryError(
                    f"backtracked curves do not span the domain (margin {margin_x})"
                )
            return CornerMap(xs, ys, margin_x, xs_ext, ys_ext)
        margin_x = min(2 * margin_x, max_margin)


def _interp_curves(
    xs: np.ndarray, ys: np.ndarray, targets: np.ndarray, d: int
) -> np.ndarray:
    """Interpolate each backtracked curve (columns of xs/ys) at the target
    abscissae with degree-(2d+1) Lagrange stencils.

    xs, ys: (n_ext, n_rows); targets: (n_t,).  Returns (n_t, n_rows).
    """
    n_ext, n_rows = xs.shape
    s = 2 * d + 2
    if np.any(np.diff(xs, axis=0) <= 0.0):
        raise OrderingError("backtracked curve abscissae are not increasing")
    idx = np.empty((n_rows, targets.size), dtype=np.int64)
    for j in range(n_rows):
        idx[j] = np.searchsorted(xs[:, j], targets, side="right") - 1
    if np.any(idx < 0) or np.any(idx >= n_ext - 1):
        raise GeometryError("interpolation abscissa outside backtracked curve span")
    start = np.clip(idx - d, 0, n_ext - s)
    cols = start[:, :, None] + np.arange(s)
    rows = np.broadcast_to(np.arange(n_rows)[:, None, None], cols.shape)
    pos = xs[cols, rows]
    val = ys[cols, rows]
    t = np.broadcast_to(targets, (n_rows, targets.size))
    out = _barycentric(pos - t[..., None], val, np.zeros_like(t))
    return out.T


def build_intermediate_layout(
    corners: CornerMap, grid: Grid2D, half_degree: int = 2
) -> IntermediateLayout:
    """Intersection ordinates, averaged boundaries, and averaged faces."""
    nx, ny = grid.nx, grid.ny
    per_x = grid.bc_x is BoundaryKind.PERIODIC
    xf = grid.x_faces()
    targets = xf[:-1] if per_x else xf

    ytilde = np.empty((nx + 1, ny + 1))
    ytilde[: targets.size, :] = _interp_curves(
        corners.xs_ext, corners.ys_ext, targets, half_degree
    )
    if per_x:
        ytilde[nx, :] = ytilde[0, :]

    ybar = 0.5 * (ytilde[:-1, :] + ytilde[1:, :])
    xbar = 0.5 * (corners.xstar[:, :-1] + corners.xstar[:, 1:])
    if per_x:
        xbar[nx, :] = xbar[0, :] + grid.lx
    if grid.bc_y is BoundaryKind.PERIODIC:
        ybar[:, ny] = ybar[:, 0] + grid.ly

    if np.any(np.diff(ybar, axis=1) <= 0.0):
        raise OrderingError("intermediate-cell boundaries not monotone per column")
    if np.any(np.diff(xbar, axis=0) <= 0.0):
        raise OrderingError("averaged face positions not monotone per row")
    return IntermediateLayout(ytilde, ybar, xbar)


def freestream_correct(
    layout: IntermediateLayout, grid: Grid2D, anchor_row: int | None = None
) -> IntermediateLayout:
    """Column-stage volume correction.

    Shifts every intermediate-cell boundary layer (rigidly in i) so each
    horizontal layer of intermediate cells sums to exactly nx*dx*dy,
    working outward from the anchor layer whose upper boundary is held
    fixed.  Requires periodic boundaries in both directions.
    """
    if grid.bc_x is not BoundaryKind.PERIODIC or grid.bc_y is not BoundaryKind.PERIODIC:
        raise GeometryError("freestream correction requires periodic boundaries")
    nx, ny = grid.nx, grid.ny
    if anchor_row is None:
        anchor_row = ny // 2
    heights = np.diff(layout.ybar, axis=1)  # (nx, ny)
    dv = grid.dx * heights.sum(axis=0) - nx * grid.cell_area  # (ny,)
    prefix = np.concatenate([[0.0], np.cumsum(dv)])  # (ny+1,)
    a = anchor_row + 1
    shifts = (prefix[a] - prefix) / (nx * grid.dx)
    shifts[ny] = shifts[0]  # exact periodic wrap of the face layers
    ybar = layout.ybar + shifts[None, :]
    if np.any(np.diff(ybar, axis=1) <= 0.0):
        raise GeometryError("volume correction collapsed an intermediate cell")
    return replace(layout, ybar=ybar)


def column_remap(
    layout: IntermediateLayout, fld: CellField, options: CcslOptions
) -> np.ndarray:
    """Column-direction conservative remap; returns intermediate-cell
    masses of shape (nx, ny)."""
    grid = fld.grid
    masses = fld.values * grid.cell_area
    profile = MassProfile(masses, grid.dy, grid.bc_y, origin=grid.y_min)
    per = grid.bc_y is BoundaryKind.PERIODIC
    if options.limiter.enabled:
        bounds = options.limiter.scaled(grid.dx)
        return limited_remap(
            layout.ybar, profile, options.half_degree, bounds, alias_last=per or None
        )
    return csl_remap(layout.ybar, profile, options.half_degree, alias_last=per or None)


def row_remap(
    layout: IntermediateLayout,
    intermediate_masses: np.ndarray,
    grid: Grid2D,
    options: CcslOptions,
) -> np.ndarray:
    """Row-direction conservative remap onto the backtracked cells.

    Periodic x: performed in the cumulative strip-volume coordinate; with
    the freestream correction enabled the faces are re-spaced uniformly in
    that coordinate (every backtracked cell then has volume dx*dy exactly).
    Zero x: plain coordinate remap of the averaged faces.
    """
    nx, ny = grid.nx, grid.ny
    d = options.half_degree
    per_x = grid.bc_x is BoundaryKind.PERIODIC
    heights = np.diff(layout.ybar, axis=1)  # (nx, ny)
    if np.any(heights <= 0.0):
        raise GeometryError("non-positive intermediate-cell height")
    widths = (grid.dx * heights).T  # (ny, nx) volume-per-cell
    u_nodes = np.zeros((ny, nx + 1))
    np.cumsum(widths, axis=1, out=u_nodes[:, 1:])
    u_total = u_nodes[:, nx]

    if per_x and options.freestream_correction:
        k = options.anchor_col if options.anchor_col is not None else nx // 2
        xa = layout.xbar[k + 1, :]  # anchor face held fixed, (ny,)
        ua = _volume_coordinate(xa[:, None], u_nodes, heights, grid, per_x)
        spacing = (u_total / nx)[:, None]
        faces = ua + (np.arange(nx + 1)[None, :] - (k + 1)) * spacing
        faces[:, nx] = faces[:, 0] + u_total
    elif per_x:
        faces = np.empty((ny, nx + 1))
        faces[:, :nx] = _volume_coordinate(
            layout.xbar[:-1, :].T, u_nodes, heights, grid, per_x
        )
        faces[:, nx] = faces[:, 0] + u_total
    else:
        faces = _volume_coordinate(layout.xbar.T, u_nodes, heights, grid, per_x)
    profile = MassProfile(
        intermediate_masses.T,
        grid.cell_area,
        BoundaryKind.PERIODIC if per_x else BoundaryKind.ZERO,
        origin=0.0,
        widths=widths,
    )
    if options.limiter.enabled:
        out = limited_remap(faces, profile, d, options.limiter, alias_last=per_x or None)
    else:
        out = csl_remap(faces, profile, d, alias_last=per_x or None)
    return out.T


def _volume_coordinate(
    x: np.ndarray,
    u_nodes: np.ndarray,
    heights: np.ndarray,
    grid: Grid2D,
    periodic: bool,
) -> np.ndarray:
    """Map x positions (ny, m) to the per-row cumulative-volume coordinate.

    Outside the domain the map continues periodically or, for zero bc,
    linearly with the edge strip height (matching the remap's ghost node
    spacing)."""
    nx = heights.shape[0]
    u_total = u_nodes[:, nx]
    kcell = np.floor((x - grid.x_min) / grid.dx).astype(np.int64)
    h = heights.T  # (ny, nx)
    if periodic:
        q, r = np.divmod(kcell, nx)
        local = x - (grid.x_min + kcell * grid.dx)
        hr = np.take_along_axis(h, r, axis=1)
        ur = np.take_along_axis(u_nodes, r, axis=1)
        return ur + q * u_total[:, None] + local * hr
    r = np.clip(kcell, 0, nx - 1)
    local = x - (grid.x_min + r * grid.dx)
    hr = np.take_along_axis(h, r, axis=1)
    ur = np.take_along_axis(u_nodes, r, axis=1)
    return ur + local * hr


def ccsl_step(
    fld: CellField,
    corners: CornerMap,
    options: CcslOptions,
    new_time: float | None = None,
) -> CellField:
    """One conservative cascade step: layout, optional correction, column
    remap, row remap, and the cell-average update."""
    grid = fld.grid
    layout = build_intermediate_layout(corners, grid, options.half_degree)
    if options.freestream_correction:
        if grid.bc_x is BoundaryKind.PERIODIC and grid.bc_y is BoundaryKind.PERIODIC:
            layout = freestream_correct(layout, grid, options.anchor_row)
        else:
            warnings.warn(
                "freestream correction requires periodic boundaries; disabled",
                stacklevel=2,
            )
            options = replace(options, freestream_correction=False)
    m_int = column_remap(layout, fld, options)
    m_back = row_remap(layout, m_int, grid, options)
    values = m_back / grid.cell_area
    out = fld.with_values(values, fld.time if new_time is None else new_time)
    return out.check_finite()
