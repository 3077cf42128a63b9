"""One-dimensional conservative remapping.

The remap reconstructs the cumulative mass function G of a line of cells:
G is anchored at a cell's left face (G = 0 there) and passes through the
signed prefix masses of the neighboring cells, so increments between
adjacent nodes equal the cell masses exactly.  Target masses are differences
of a single shared cumulative value per backtracked face, which makes the
remap telescope: total mass is conserved independent of interpolation
degree or limiter blending.

Two interpolants are kept per cell: the two-point linear one (monotone,
diffusive) and a degree-(2d+1) Lagrange polynomial through 2d+2 nodes
centered on the cell that contains the evaluation point.  The blending
limiter mixes them with a per-cell coefficient alpha chosen as the smallest
value that keeps every subinterval mass between the physical bounds.

Profiles may have uniform cell size or per-cell widths; the latter is used
by the cascade row sweep, where the 1D coordinate is cumulative strip
volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import OrderingError, StencilError
from .grid import BoundaryKind


@dataclass(frozen=True)
class LimiterBounds:
    """Density bounds (mass per unit length in the profile coordinate)."""

    f_min: float
    f_max: float
    enabled: bool = True

    def __post_init__(self):
        if self.f_min > self.f_max:
            raise ValueError(f"f_min={self.f_min} exceeds f_max={self.f_max}")

    def scaled(self, factor: float) -> "LimiterBounds":
        return LimiterBounds(self.f_min * factor, self.f_max * factor, self.enabled)


#: Limiter disabled; high-order reconstruction used everywhere.
NO_BOUNDS = LimiterBounds(-np.inf, np.inf, enabled=False)


@dataclass(frozen=True)
class MassProfile:
    """A batch of 1D mass lines sharing one boundary rule.

    masses has shape (n,) or (batch, n).  Nodes are implicit and uniform
    (``origin + k*cell_size``) unless ``widths`` gives per-cell spacings,
    in which case nodes are its prefix sums starting at ``origin``.
    """

    masses: np.ndarray
    cell_size: float
    bc: BoundaryKind
    origin: float = 0.0
    widths: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.masses.shape[-1]


def _check_degree(n: int, d: int) -> None:
    if d < 0:
        raise StencilError(f"half-degree must be non-negative, got {d}")
    if n < 2 * d + 2:
        raise StencilError(
            f"profile of {n} cells too short for half-degree {d} "
            f"(need at least {2 * d + 2})"
        )


def _barycentric(xs: np.ndarray, ys: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate Lagrange interpolants through (xs, ys) at t.

    xs, ys: (..., s) stencil nodes; t: (...) evaluation points.  Exact node
    hits return the node value (no 0/0).
    """
    diff_nodes = xs[..., :, None] - xs[..., None, :]
    s = xs.shape[-1]
    diag = np.arange(s)
    diff_nodes[..., diag, diag] = 1.0
    w = 1.0 / np.prod(diff_nodes, axis=-1)
    dt = t[..., None] - xs
    hit = dt == 0.0
    any_hit = hit.any(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = w / dt
        val = np.sum(ratio * ys, axis=-1) / np.sum(ratio, axis=-1)
    if np.any(any_hit):
        hit_val = np.sum(np.where(hit, ys, 0.0), axis=-1)
        val = np.where(any_hit, hit_val, val)
    return val


def _alpha_required(
    m_lin: np.ndarray, m_high: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Smallest alpha in [0, 1] with lo <= alpha*m_lin + (1-alpha)*m_high <= hi.

    Clips to 1 when even the linear mass violates a bound (the blend is then
    the most diffusive admissible choice).
    """
    denom = m_lin - m_high
    with np.errstate(divide="ignore", invalid="ignore"):
        a_low = (lo - m_high) / denom
        a_up = (m_high - hi) / -denom
    need_low = m_high < lo
    need_up = m_high > hi
    a_low = np.where(need_low, np.where(denom > 0.0, a_low, 1.0), 0.0)
    a_up = np.where(need_up, np.where(denom < 0.0, a_up, 1.0), 0.0)
    return np.clip(np.maximum(a_low, a_up), 0.0, 1.0)


class _Evaluator:
    """Shared cumulative-evaluation machinery for one batched remap."""

    def __init__(self, masses: np.ndarray, profile: MassProfile, d: int):
        _check_degree(masses.shape[1], d)
        self.d = d
        self.bc = profile.bc
        self.uniform = profile.widths is None
        self.cell_size = profile.cell_size
        batch, n = masses.shape

        if self.uniform:
            nodes = profile.origin + profile.cell_size * np.arange(n + 1)
            nodes = np.broadcast_to(nodes, (batch, n + 1)).copy()
        else:
            widths = np.atleast_2d(np.asarray(profile.widths, dtype=float))
            widths = np.broadcast_to(widths, (batch, n)).copy()
            if np.any(widths <= 0.0):
                raise OrderingError("profile widths must be positive")
            nodes = np.empty((batch, n + 1))
            nodes[:, 0] = profile.origin
            np.cumsum(widths, axis=1, out=nodes[:, 1:])
            nodes[:, 1:] += profile.origin

        if self.bc is BoundaryKind.ZERO:
            pad = d + 1
            self.pad = pad
            masses = np.pad(masses, ((0, 0), (pad, pad)))
            wl = nodes[:, 1:2] - nodes[:, 0:1]
            wr = nodes[:, -1:] - nodes[:, -2:-1]
            left = nodes[:, :1] - wl * np.arange(pad, 0, -1)[None, :]
            right = nodes[:, -1:] + wr * np.arange(1, pad + 1)[None, :]
            nodes = np.concatenate([left, nodes, right], axis=1)
        else:
            self.pad = 0

        self.masses = masses
        self.nodes = nodes
        self.ncells = masses.shape[1]
        self.cum = np.zeros((batch, self.ncells + 1))
        np.cumsum(masses, axis=1, out=self.cum[:, 1:])
        self.total = self.cum[:, -1].copy()
        self.period = nodes[:, -1] - nodes[:, 0] if self.bc is BoundaryKind.PERIODIC else None

    def locate(self, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Reduce faces into the base span and find their containing cell.

        Returns (reduced positions, cell index, wrap count).
        """
        n0 = self.nodes[:, 0:1]
        if self.bc is BoundaryKind.PERIODIC:
            p = self.period[:, None]
            wraps = np.floor((faces - n0) / p)
            red = faces - wraps * p
            high = red >= n0 + p
            wraps = np.where(high, wraps + 1, wraps)
            red = np.where(high, red - p, red)
            low = red < n0
            wraps = np.where(low, wraps - 1, wraps)
            red = np.where(low, red + p, red)
        else:
            wraps = np.zeros_like(faces)
            red = faces
        if self.uniform:
            idx = np.floor((red - n0) / self.cell_size).astype(np.int64)
        else:
            idx = np.empty(red.shape, dtype=np.int64)
            for b in range(red.shape[0]):
                idx[b] = np.searchsorted(self.nodes[b], red[b], side="right") - 1
        idx = np.clip(idx, 0, self.ncells - 1)
        return red, idx, wraps.astype(np.int64)

    def stencil_values(
        self, red: np.ndarray, idx: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Gather anchored stencils and evaluate both interpolants.

        Returns (linear local value, high local value, anchor node
        cumulative, local offset t, anchor cell width).
        """
        d = self.d
        s = 2 * d + 2
        batch = idx.shape[0]
        if self.bc is BoundaryKind.PERIODIC:
            k = idx[..., None] + np.arange(-d, d + 2)
            q, r = np.divmod(k, self.ncells)
            flat = r.reshape(batch, -1)
            pos = np.take_along_axis(self.nodes, flat, axis=1).reshape(k.shape)
            pos = pos + q * self.period[:, None, None]
            cumv = np.take_along_axis(self.cum, flat, axis=1).reshape(k.shape)
            cumv = cumv + q * self.total[:, None, None]
            anchor = np.full(idx.shape, d, dtype=np.int64)
        else:
            start = np.clip(idx - d, 0, self.ncells - (s - 1))
            k = start[..., None] + np.arange(s)
            flat = k.reshape(batch, -1)
            pos = np.take_along_axis(self.nodes, flat, axis=1).reshape(k.shape)
            cumv = np.take_along_axis(self.cum, flat, axis=1).reshape(k.shape)
            anchor = idx - start
        a = anchor[..., None]
        pos0 = np.take_along_axis(pos, a, axis=-1)[..., 0]
        cum0 = np.take_along_axis(cumv, a, axis=-1)[..., 0]
        pos1 = np.take_along_axis(pos, a + 1, axis=-1)[..., 0]
        m_anchor = np.take_along_axis(self.masses, idx, axis=1)
        t = red - pos0
        gap = pos1 - pos0
        lin = m_anchor * (t / gap)
        high = _barycentric(pos - pos0[..., None], cumv - cum0[..., None], t)
        return lin, high, cum0, t, gap


def _limiter_alpha(
    ev: _Evaluator,
    idx: np.ndarray,
    wraps: np.ndarray,
    lin: np.ndarray,
    high: np.ndarray,
    t: np.ndarray,
    gap: np.ndarray,
    bounds: LimiterBounds,
) -> np.ndarray:
    """Per-face alpha of the cell each face falls in.

    Subintervals are the pieces each Eulerian cell is cut into by the faces
    inside it; for every piece the smallest admissible alpha is solved in
    closed form and cells take the maximum over their pieces.
    """
    batch, m = idx.shape
    key = idx + wraps * ev.ncells
    same = np.zeros_like(idx, dtype=bool)
    same[:, 1:] = key[:, 1:] == key[:, :-1]

    # piece between this face and the previous breakpoint in the same cell
    left_lin = np.where(same, lin - np.roll(lin, 1, axis=1), lin)
    left_high = np.where(same, high - np.roll(high, 1, axis=1), high)
    left_w = np.where(same, t - np.roll(t, 1, axis=1), t)
    # closing piece between the last face in a cell and its right node
    m_anchor = np.take_along_axis(ev.masses, idx, axis=1)
    right_lin = m_anchor - lin
    right_high = m_anchor - high
    right_w = gap - t
    closes = np.ones_like(same)
    closes[:, :-1] = key[:, :-1] != key[:, 1:]

    a_left = _alpha_required(
        left_lin, left_high, bounds.f_min * left_w, bounds.f_max * left_w
    )
    a_right = np.where(
        closes,
        _alpha_required(right_lin, right_high, bounds.f_min * right_w, bounds.f_max * right_w),
        0.0,
    )

    # consecutive faces sharing a cell form a group; each cell takes the
    # max requirement over its pieces
    new_group = ~same
    counts = new_group.sum(axis=1)
    offsets = np.cumsum(counts) - counts
    gid = np.cumsum(new_group, axis=1) - 1 + offsets[:, None]
    gid_flat = gid.ravel()
    amax = np.zeros(int(counts.sum()))
    np.maximum.at(amax, gid_flat, a_left.ravel())
    np.maximum.at(amax, gid_flat, a_right.ravel())
    return amax[gid_flat].reshape(batch, m)


def _remap(
    faces: np.ndarray,
    profile: MassProfile,
    d: int,
    bounds: LimiterBounds | None,
    alias_last: bool | None = None,
) -> np.ndarray:
    single = np.asarray(profile.masses).ndim == 1 and np.asarray(faces).ndim == 1
    faces = np.atleast_2d(np.asarray(faces, dtype=float))
    masses = np.atleast_2d(np.asarray(profile.masses, dtype=float))
    batch = max(faces.shape[0], masses.shape[0])
    faces = np.broadcast_to(faces, (batch, faces.shape[1])).copy()
    masses = np.broadcast_to(masses, (batch, masses.shape[1])).copy()
    if np.any(np.diff(faces, axis=1) <= 0.0):
        raise OrderingError("backtracked faces are not strictly increasing")

    ev = _Evaluator(masses, profile, d)
    if alias_last is None:
        alias_last = ev.bc is BoundaryKind.PERIODIC and bool(
            np.all(faces[:, -1] == faces[:, 0] + ev.period)
        )
    eval_faces = faces[:, :-1] if alias_last else faces

    red, idx, wraps = ev.locate(eval_faces)
    lin, high, cum0, t, gap = ev.stencil_values(red, idx)

    if bounds is not None and bounds.enabled:
        alpha = _limiter_alpha(ev, idx, wraps, lin, high, t, gap, bounds)
        local = alpha * lin + (1.0 - alpha) * high
    else:
        local = high
    values = cum0 + local + wraps * ev.total[:, None]

    if alias_last:
        values = np.concatenate([values, values[:, :1] + ev.total[:, None]], axis=1)
    out = np.diff(values, axis=1)
    return out[0] if single else out


def csl_remap(
    faces: np.ndarray,
    profile: MassProfile,
    d: int = 2,
    alias_last: bool | None = None,
) -> np.ndarray:
    """Conservative remap of cell masses through backtracked faces.

    faces: (n+1,) or (batch, n+1) strictly increasing target-face positions
    (periodic profiles expect them unwrapped).  Returns the target masses,
    one fewer than faces along the last axis.  ``alias_last=True`` treats
    the final face as the first face shifted by one period, which makes
    conservation exact to the last bit.
    """
    return _remap(faces, profile, d, None, alias_last)


def limited_remap(
    faces: np.ndarray,
    profile: MassProfile,
    d: int,
    bounds: LimiterBounds,
    alias_last: bool | None = None,
) -> np.ndarray:
    """csl_remap with the maximum-principle blending limiter applied."""
    if not bounds.enabled:
        return _remap(faces, profile, d, None, alias_last)
    return _remap(faces, profile, d, bounds, alias_last)


class CumulativeInterpolant:
    """Degree-(2d+1) cumulative-mass polynomial anchored at one cell face.

    Satisfies G(left face of anchor cell) = 0 with node increments equal to
    the stencil cell masses; evaluation anywhere returns the interpolated
    cumulative mass relative to the anchor face.
    """

    def __init__(self, offsets: np.ndarray, values: np.ndarray):
        self.node_offsets = offsets
        self.node_values = values

    def __call__(self, x_offset) -> np.ndarray | float:
        t = np.asarray(x_offset, dtype=float)
        shape = t.shape + self.node_offsets.shape
        res = _barycentric(
            np.broadcast_to(self.node_offsets, shape).copy(),
            np.broadcast_to(self.node_values, shape),
            t,
        )
        return float(res) if np.isscalar(x_offset) else res


def cumulative_mass_interpolant(
    profile: MassProfile, i: int, d: int = 2
) -> CumulativeInterpolant:
    """Build G for anchor cell i; the argument of the result is the offset
    from the cell's left face."""
    masses = np.atleast_2d(np.asarray(profile.masses, dtype=float))
    if masses.shape[0] != 1:
        raise ValueError("interpolant construction expects a single profile")
    if not 0 <= i < masses.shape[1]:
        raise StencilError(f"anchor cell {i} outside profile of {masses.shape[1]} cells")
    ev = _Evaluator(masses, profile, d)
    i_pad = i + ev.pad
    if ev.bc is BoundaryKind.PERIODIC:
        k = i_pad + np.arange(-d, d + 2)
        q, r = np.divmod(k, ev.ncells)
        pos = ev.nodes[0, r] + q * ev.period[0]
        cumv = ev.cum[0, r] + q * ev.total[0]
    else:
        s = 2 * d + 2
        start = int(np.clip(i_pad - d, 0, ev.ncells - (s - 1)))
        k = start + np.arange(s)
        pos = ev.nodes[0, k]
        cumv = ev.cum[0, k]
    return CumulativeInterpolant(pos - ev.nodes[0, i_pad], cumv - ev.cum[0, i_pad])


def linear_mass_interpolant(profile: MassProfile, i: int) -> CumulativeInterpolant:
    """Two-node (d = 0) cumulative interpolant for anchor cell i."""
    return cumulative_mass_interpolant(profile, i, 0)


def blend_alpha(
    faces_in_cell: Sequence[float],
    g_linear: Callable[[float], float],
    g_high: Callable[[float], float],
    cell_size: float,
    bounds: LimiterBounds,
) -> float:
    """Blending coefficient for one cell per the subinterval constraints.

    faces_in_cell are offsets (relative to the cell's left face) of the
    backtracked points strictly inside the cell; the interpolants take the
    same offsets.  Returns 1.0 when no face lies inside the cell.
    """
    if len(faces_in_cell) == 0:
        return 1.0
    pts = np.concatenate(
        [[0.0], np.sort(np.asarray(faces_in_cell, dtype=float)), [cell_size]]
    )
    gl = np.array([g_linear(p) for p in pts])
    gh = np.array([g_high(p) for p in pts])
    widths = np.diff(pts)
    a = _alpha_required(
        np.diff(gl), np.diff(gh), bounds.f_min * widths, bounds.f_max * widths
    )
    return float(a.max())
