"""Benchmark scenarios: initial conditions, per-model time loops, and the
baseline transport schemes (point-wise BSL and dimensionally split CSL/BSL).

Models:
  rotation                rigid-body rotation of a cosine bump (zero bc)
  swirling                time-reversing swirling deformation of the bump
  swirling_discontinuous  same flow, composite discontinuous profile
  diocotron               guiding-center annulus on [-15,15]^2 (zero bc)
  modified_gc_uniform     uniform state under the driven Poisson source
  modified_gc_vortex      temperature-modulated state, same source
  rvm                     1D relativistic Vlasov-Maxwell in (x, p)

Method names: ccsl (plain), ccsl_improved (volume correction + limiter),
bsl, split_csl, split_bsl.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import cascade2d, characteristics, fields
from .cascade2d import CcslOptions, ValidityReport, validity_check
from .diagnostics import DiagnosticsSeries
from .errors import ConfigError, ValidityError
from .grid import BoundaryKind, CellField, Grid2D, build_grid, init_cell_averages
from .recon1d import LimiterBounds, MassProfile, NO_BOUNDS, _barycentric, csl_remap, limited_remap

MODELS = (
    "rotation",
    "swirling",
    "swirling_discontinuous",
    "diocotron",
    "modified_gc_uniform",
    "modified_gc_vortex",
    "rvm",
)
METHODS = ("ccsl", "ccsl_improved", "bsl", "split_csl", "split_bsl")

BUMP_RADIUS = 0.3 * np.pi
BUMP_CENTER = (0.3 * np.pi, 0.0)


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    nx: int
    ny: int
    dt: float
    t_end: float
    method: str = "ccsl_improved"
    half_degree: int = 2
    limiter: bool | None = None      # None: per method default
    freestream: bool | None = None   # None: per method default
    substeps: int | None = None      # characteristic substeps (swirling)
    ex_mode: str = "ampere"          # rvm longitudinal-field branch
    predictor: str = "bsl"           # field-refresh transport: bsl | ccsl
    quad_order: int = 4

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.t_end < 0:
            raise ConfigError("dt must be positive and t_end non-negative")
        if self.ex_mode not in ("ampere", "gauss"):
            raise ConfigError(f"unknown ex mode {self.ex_mode!r}")
        if self.predictor not in ("bsl", "ccsl"):
            raise ConfigError(f"unknown predictor {self.predictor!r}")

    @property
    def improved(self) -> bool:
        return self.method == "ccsl_improved"

    def ccsl_options(self, bounds: LimiterBounds, grid: Grid2D) -> CcslOptions:
        lim = self.improved if self.limiter is None else self.limiter
        fsc = self.improved if self.freestream is None else self.freestream
        periodic = (
            grid.bc_x is BoundaryKind.PERIODIC and grid.bc_y is BoundaryKind.PERIODIC
        )
        return CcslOptions(
            half_degree=self.half_degree,
            freestream_correction=fsc and periodic,
            limiter=replace(bounds, enabled=lim) if lim else NO_BOUNDS,
        )


@dataclass(frozen=True)
class RvmParams:
    """Wave/plasma parameters satisfying the discrete dispersion relation."""

    k0: float
    ks: float
    p_osc: float
    gamma0: float
    omega_s: float
    omega0: float
    q_amp: float
    v_th: float
    eps: float

    @classmethod
    def standard(cls, dx: float, dt: float) -> "RvmParams":
        k0 = 1.0 / math.sqrt(2.0)
        ks = (2.0 / dx) * math.sin(0.5 * k0 * dx)
        p_osc = math.sqrt(3.0)
        gamma0 = math.sqrt(1.0 + p_osc**2)
        omega_s = math.sqrt(1.0 / gamma0 + ks**2)
        omega0 = (4.0 / dt) * math.asin(0.25 * dt * omega_s)
        return cls(
            k0=k0,
            ks=ks,
            p_osc=p_osc,
            gamma0=gamma0,
            omega_s=omega_s,
            omega0=omega0,
            q_amp=p_osc * omega_s,
            v_th=math.sqrt(3.0 / 511.0),
            eps=0.1,
        )


@dataclass
class ScenarioState:
    fld: CellField
    maxwell: fields.MaxwellState | None = None
    efield: fields.ElectricField2D | None = None
    validity: ValidityReport | None = None
    gauss_residual: float = 0.0
    unstable: bool = False


# ---------------------------------------------------------------------------
# initial conditions


def bump_density(x, y, center=BUMP_CENTER, r0=BUMP_RADIUS):
    r = np.sqrt((x - center[0]) ** 2 + (y - center[1]) ** 2)
    return np.where(r < r0, r0 * np.cos(np.pi * r / (2.0 * r0)) ** 6, 0.0)


def discontinuous_density(x, y, r0=BUMP_RADIUS):
    """Notched disk (top), cone (bottom), cosine hump (left)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    r_disk = np.sqrt(x**2 + (y - 0.5 * np.pi) ** 2)
    disk = (r_disk <= r0) & ((np.abs(x) >= 0.05 * np.pi) | (y >= 0.5 * np.pi))
    out = np.where(disk, 1.0, out)
    r_cone = np.sqrt(x**2 + (y + 0.5 * np.pi) ** 2)
    out = np.where(r_cone <= r0, 1.0 - r_cone / r0, out)
    r_hump = np.sqrt((x + 0.5 * np.pi) ** 2 + y**2)
    out = np.where(r_hump <= r0, 0.25 * (1.0 + np.cos(np.pi * r_hump / r0)), out)
    return out


def diocotron_density(x, y, eps=0.1, r_minus=5.0, r_plus=8.0, ell=6):
    r = np.sqrt(x**2 + y**2)
    theta = np.arctan2(y, x)
    ring = (r >= r_minus) & (r <= r_plus)
    return np.where(
        ring, (1.0 + eps * np.cos(ell * theta)) * np.exp(-4.0 * (r - 6.5) ** 2), 0.0
    )


def vortex_temperature(x, lx=16.0):
    return 1.0 - (lx / (74.0 * np.pi)) * np.cos(2.0 * np.pi * x / lx)


def vortex_density(x, y, lx=16.0):
    return 1.0 / np.sqrt(2.0 * np.pi * vortex_temperature(x, lx))


# ---------------------------------------------------------------------------
# baseline transport


def bsl_step(
    fld: CellField, backtracked: np.ndarray, half_degree: int = 2
) -> CellField:
    """Point-to-point backward update: tensor Lagrange interpolation of the
    old field at the backtracked cell centers (degree 2d+1 per axis)."""
    grid = fld.grid
    d = half_degree
    s = 2 * d + 2
    xpts = backtracked[..., 0].ravel()
    ypts = backtracked[..., 1].ravel()

    def axis_stencil(pos, lo, delta, n, periodic):
        # t measures position in center-index units: center k sits at t = k
        t = (pos - lo) / delta - 0.5
        i0 = np.floor(t).astype(np.int64)
        kk = i0[:, None] + np.arange(-d, d + 2)
        node = kk.astype(float)
        w = _axis_weights(t, node)
        if periodic:
            return kk % n, w, None
        valid = (kk >= 0) & (kk < n)
        return np.clip(kk, 0, n - 1), w, valid

    def _axis_weights(t, node):
        diff = node[:, :, None] - node[:, None, :]
        diag = np.arange(s)
        diff[:, diag, diag] = 1.0
        wk = 1.0 / np.prod(diff, axis=-1)
        dt_ = t[:, None] - node
        hit = dt_ == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = wk / dt_
            w = ratio / ratio.sum(axis=1)[:, None]
        if np.any(hit):
            w = np.where(
                hit.any(axis=1)[:, None], hit.astype(float), w
            )
        return w

    ix, wx, vx = axis_stencil(
        xpts, grid.x_min, grid.dx, grid.nx, grid.bc_x is BoundaryKind.PERIODIC
    )
    iy, wy, vy = axis_stencil(
        ypts, grid.y_min, grid.dy, grid.ny, grid.bc_y is BoundaryKind.PERIODIC
    )
    vals = fld.values[ix[:, :, None], iy[:, None, :]]
    if vx is not None:
        vals = vals * vx[:, :, None]
    if vy is not None:
        vals = vals * vy[:, None, :]
    out = np.einsum("pij,pi,pj->p", vals, wx, wy)
    return fld.with_values(out.reshape(grid.nx, grid.ny))


def _sweep_faces_1d(
    coords: np.ndarray, other: np.ndarray, vel, dt: float
) -> np.ndarray:
    """Backtrack a batch of 1D face lines with one frozen-velocity RK2 step.

    coords: (batch, m) positions along the sweep axis; other: (batch,)
    frozen cross-coordinates; vel(pos, other) -> velocity along the axis.
    """
    a0 = vel(coords, other[:, None])
    mid = coords - 0.5 * dt * a0
    return coords - dt * vel(mid, other[:, None])


def split_step(
    fld: CellField,
    ax_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    ay_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dt: float,
    flavor: str = "csl",
    half_degree: int = 2,
    bounds: LimiterBounds = NO_BOUNDS,
) -> CellField:
    """Strang-split transport: x sweep (dt/2), y sweep (dt), x sweep (dt/2),
    each sweep one-dimensional with the cross coordinate frozen.

    ax_fn(x, y) and ay_fn(x, y) are broadcastable velocity components.
    """
    grid = fld.grid
    d = half_degree

    def sweep_x(values: np.ndarray, h: float) -> np.ndarray:
        faces = np.broadcast_to(grid.x_faces(), (grid.ny, grid.nx + 1))
        back = _sweep_faces_1d(faces, grid.y_centers(), ax_fn, h)
        if flavor == "csl":
            prof = MassProfile(values.T * grid.dx, grid.dx, grid.bc_x, origin=grid.x_min)
            if bounds.enabled:
                m = limited_remap(back, prof, d, bounds)
            else:
                m = csl_remap(back, prof, d)
            return (m / grid.dx).T
        centers = np.broadcast_to(grid.x_centers(), (grid.ny, grid.nx))
        backc = _sweep_faces_1d(centers, grid.y_centers(), ax_fn, h)
        return _interp_rows(values.T, backc, grid.x_min, grid.dx, grid.bc_x, d).T

    def sweep_y(values: np.ndarray, h: float) -> np.ndarray:
        faces = np.broadcast_to(grid.y_faces(), (grid.nx, grid.ny + 1))
        back = _sweep_faces_1d(faces, grid.x_centers(), lambda y, x: ay_fn(x, y), h)
        if flavor == "csl":
            prof = MassProfile(values * grid.dy, grid.dy, grid.bc_y, origin=grid.y_min)
            if bounds.enabled:
                m = limited_remap(back, prof, d, bounds.scaled(1.0))
            else:
                m = csl_remap(back, prof, d)
            return m / grid.dy
        centers = np.broadcast_to(grid.y_centers(), (grid.nx, grid.ny))
        backc = _sweep_faces_1d(centers, grid.x_centers(), lambda y, x: ay_fn(x, y), h)
        return _interp_rows(values, backc, grid.y_min, grid.dy, grid.bc_y, d)

    v = sweep_x(fld.values, 0.5 * dt)
    v = sweep_y(v, dt)
    v = sweep_x(v, 0.5 * dt)
    return fld.with_values(v)


def _interp_rows(values, positions, lo, delta, bc, d):
    """Row-wise 1D Lagrange interpolation of cell-centered data."""
    batch, n = values.shape
    t = (positions - lo) / delta - 0.5  # center k sits at t = k
    i0 = np.floor(t).astype(np.int64)
    kk = i0[..., None] + np.arange(-d, d + 2)
    node = kk.astype(float)
    rows = np.arange(batch)[:, None, None]
    if bc is BoundaryKind.PERIODIC:
        data = values[rows, kk % n]
    else:
        data = values[rows, np.clip(kk, 0, n - 1)]
        data = np.where((kk >= 0) & (kk < n), data, 0.0)
    return _barycentric(node - t[..., None], data, np.zeros_like(t))


# ---------------------------------------------------------------------------
# scenario classes


class LinearAdvectionScenario:
    """Prescribed divergence-free velocity; density is passively advected."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        # the flow velocity vanishes on the boundary and is 2pi-periodic,
        # so the discontinuous variant may run periodic, which enables the
        # volume correction (the profiles never reach the boundary);
        # the smooth table benchmarks keep the published zero boundaries
        per = config.model == "swirling_discontinuous"
        bc = BoundaryKind.PERIODIC if per else BoundaryKind.ZERO
        self.grid = build_grid(
            -np.pi, np.pi, -np.pi, np.pi, config.nx, config.ny, bc, bc
        )
        if config.model == "swirling_discontinuous":
            self.density = discontinuous_density
            self.bounds = LimiterBounds(0.0, 1.0)
        else:
            self.density = bump_density
            self.bounds = LimiterBounds(0.0, BUMP_RADIUS)
        # 4 substeps keep the RK4 characteristic error below the spatial
        # error on the table meshes; rotation is backtracked exactly
        self.trajectory = characteristics.TrajectoryOptions(
            config.substeps or (1 if config.model == "rotation" else 4)
        )

    def initial(self) -> ScenarioState:
        return ScenarioState(
            init_cell_averages(self.grid, self.density, self.config.quad_order)
        )

    def _backtrack(self, t_new: float, dt: float):
        if self.config.model == "rotation":
            return lambda pts: characteristics.backtrack_rotation(pts, dt)
        return lambda pts: characteristics.backtrack_swirling(
            pts, t_new, dt, self.trajectory.substeps
        )

    def velocity_samples(self, t_mid: float):
        x, y = self.grid.corner_mesh()
        if self.config.model == "rotation":
            return characteristics.rotation_velocity(x, y)
        return characteristics.swirling_velocity(x, y, t_mid)

    def advance(self, state: ScenarioState) -> ScenarioState:
        cfg = self.config
        fld = state.fld
        t_new = fld.time + cfg.dt
        back = self._backtrack(t_new, cfg.dt)
        if cfg.method in ("ccsl", "ccsl_improved"):
            report = validity_check(
                *self.velocity_samples(fld.time + 0.5 * cfg.dt), self.grid, cfg.dt
            )
            if not report.ok:
                raise ValidityError(
                    f"grid-distortion constraint violated: {report}"
                )
            corners = cascade2d.backtrack_corner_map(
                self.grid, back, cfg.half_degree
            )
            new = cascade2d.ccsl_step(
                fld, corners, cfg.ccsl_options(self.bounds, self.grid), t_new
            )
            return replace(state, fld=new, validity=report)
        if cfg.method == "bsl":
            xc, yc = self.grid.center_mesh()
            pts = np.column_stack([xc.ravel(), yc.ravel()])
            new = bsl_step(fld, back(pts).reshape(self.grid.nx, self.grid.ny, 2),
                           cfg.half_degree)
            return replace(state, fld=new.with_values(new.values, t_new))
        # split schemes freeze the time dependence at the step midpoint
        tm = fld.time + 0.5 * cfg.dt
        if self.config.model == "rotation":
            ax = lambda x, y: characteristics.rotation_velocity(x, y)[0]
            ay = lambda x, y: characteristics.rotation_velocity(x, y)[1]
        else:
            ax = lambda x, y: characteristics.swirling_velocity(x, y, tm)[0]
            ay = lambda x, y: characteristics.swirling_velocity(x, y, tm)[1]
        flavor = "csl" if cfg.method == "split_csl" else "bsl"
        bounds = self.bounds if cfg.limiter else NO_BOUNDS
        new = split_step(fld, ax, ay, cfg.dt, flavor, cfg.half_degree, bounds)
        return replace(state, fld=new.with_values(new.values, t_new))

    def energy(self, state: ScenarioState) -> float:
        return 0.0

    def exact_values(self, t: float) -> np.ndarray | None:
        if self.config.model == "rotation":
            ang = -characteristics.ROTATION_OMEGA * t
            c, s = np.cos(ang), np.sin(ang)
            ref = init_cell_averages(
                self.grid,
                lambda x, y: self.density(c * x - s * y, s * x + c * y),
                self.config.quad_order,
            )
            return ref.values
        if self.config.model == "swirling":
            return _swirling_reference(self.grid, t, self.config.quad_order)
        return None


def _swirling_reference(
    grid: Grid2D, t: float, quad_order: int, ref_substeps: int = 200
) -> np.ndarray:
    """Exact cell averages of the swirling solution: quadrature points are
    backtracked to t = 0 with a fine RK4 integration of the flow."""
    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    wx = 0.5 * weights
    xq = (grid.x_centers()[:, None] + 0.5 * grid.dx * nodes[None, :]).ravel()
    yq = (grid.y_centers()[:, None] + 0.5 * grid.dy * nodes[None, :]).ravel()
    xg, yg = np.meshgrid(xq, yq, indexing="ij")
    pts = np.column_stack([xg.ravel(), yg.ravel()])
    nsub = max(ref_substeps, int(ref_substeps * t))
    back = characteristics.backtrack_swirling(pts, t, t, substeps=nsub)
    vals = bump_density(back[:, 0], back[:, 1]).reshape(
        grid.nx, quad_order, grid.ny, quad_order
    )
    return np.einsum("iqjr,q,r->ij", vals, wx, wx)


class GuidingCenterScenario:
    """Density advected by the rotated gradient of a self-consistent
    potential; predictor-corrector time stepping."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        m = config.model
        if m == "diocotron":
            bc = BoundaryKind.ZERO
            self.grid = build_grid(-15.0, 15.0, -15.0, 15.0, config.nx, config.ny, bc, bc)
            self.density = diocotron_density
            self.bounds = LimiterBounds(0.0, 1.1)
            self.source = None
        else:
            bc = BoundaryKind.PERIODIC
            self.grid = build_grid(0.0, 16.0, 0.0, 8.0, config.nx, config.ny, bc, bc)
            self.source = fields.SourceParams()
            if m == "modified_gc_uniform":
                self.density = lambda x, y: np.ones(np.broadcast(x, y).shape)
                self.bounds = LimiterBounds(1.0, 1.0)
            else:
                self.density = vortex_density
                tmax = 1.0 + self.grid.lx / (74.0 * np.pi)
                tmin = 1.0 - self.grid.lx / (74.0 * np.pi)
                self.bounds = LimiterBounds(
                    1.0 / math.sqrt(2.0 * np.pi * tmax),
                    1.0 / math.sqrt(2.0 * np.pi * tmin),
                )
        self.periodic = bc is BoundaryKind.PERIODIC
        self._warned_clamp = False

    def initial(self) -> ScenarioState:
        fld = init_cell_averages(self.grid, self.density, self.config.quad_order)
        return ScenarioState(fld, efield=self._solve_field(fld))

    def _solve_field(self, fld: CellField) -> fields.ElectricField2D:
        rho = fields.modified_source(fld, self.source) if self.source else fld
        if self.periodic:
            pot = fields.poisson_periodic(rho)
        else:
            pot = fields.poisson_dirichlet(rho)
        return fields.e_perp_from_phi(pot)

    def _sampler(self, ef: fields.ElectricField2D):
        sx = characteristics.BilinearSampler2D(self.grid, ef.ex_perp)
        sy = characteristics.BilinearSampler2D(self.grid, ef.ey_perp)

        def vel(x, y):
            if not self.periodic and not self._warned_clamp:
                g = self.grid
                if np.any((x < g.x_min) | (x > g.x_max) | (y < g.y_min) | (y > g.y_max)):
                    warnings.warn("field sampled outside domain; clamped", stacklevel=2)
                    self._warned_clamp = True
            return sx(x, y), sy(x, y)

        return vel

    def advance(self, state: ScenarioState) -> ScenarioState:
        cfg = self.config
        fld = state.fld
        t_new = fld.time + cfg.dt
        e_now = self._solve_field(fld)

        # predictor over dt/2 to refresh the field: point update by
        # default, conservative cascade when configured
        xc, yc = self.grid.center_mesh()
        centers = np.column_stack([xc.ravel(), yc.ravel()])
        if cfg.predictor == "ccsl":
            half_back = lambda pts: characteristics.backtrack_electrostatic(
                pts, self._sampler(e_now), 0.5 * cfg.dt
            )
            half_corners = cascade2d.backtrack_corner_map(
                self.grid, half_back, cfg.half_degree
            )
            f_star = cascade2d.ccsl_step(
                fld, half_corners, cfg.ccsl_options(self.bounds, self.grid)
            )
        else:
            half = characteristics.backtrack_electrostatic(
                centers, self._sampler(e_now), 0.5 * cfg.dt
            )
            f_star = bsl_step(fld, half.reshape(self.grid.nx, self.grid.ny, 2),
                              cfg.half_degree)
        e_star = self._solve_field(f_star)
        vel = self._sampler(e_star)

        report = validity_check(
            *vel(*self.grid.corner_mesh()), self.grid, cfg.dt
        )
        if cfg.method in ("ccsl", "ccsl_improved"):
            if not report.ok:
                raise ValidityError(f"grid-distortion constraint violated: {report}")
            back = lambda pts: characteristics.backtrack_electrostatic(pts, vel, cfg.dt)
            corners = cascade2d.backtrack_corner_map(self.grid, back, cfg.half_degree)
            new = cascade2d.ccsl_step(fld, corners, cfg.ccsl_options(self.bounds, self.grid), t_new)
        elif cfg.method == "bsl":
            full = characteristics.backtrack_electrostatic(centers, vel, cfg.dt)
            new = bsl_step(fld, full.reshape(self.grid.nx, self.grid.ny, 2),
                           cfg.half_degree)
            new = new.with_values(new.values, t_new)
        else:
            flavor = "csl" if cfg.method == "split_csl" else "bsl"
            sx = characteristics.BilinearSampler2D(self.grid, e_star.ex_perp)
            sy = characteristics.BilinearSampler2D(self.grid, e_star.ey_perp)
            new = split_step(fld, sx, sy, cfg.dt, flavor, cfg.half_degree, NO_BOUNDS)
            new = new.with_values(new.values, t_new)
        new.check_finite()
        unstable = not report.ok
        return replace(state, fld=new, efield=e_star, validity=report, unstable=unstable)

    def energy(self, state: ScenarioState) -> float:
        ef = self._solve_field(state.fld)
        area = self.grid.cell_area
        return 0.5 * float((ef.ex_perp**2 + ef.ey_perp**2).sum()) * area

    def exact_values(self, t: float) -> np.ndarray | None:
        return None


class RvmScenario:
    """1D relativistic Vlasov-Maxwell in the (x, p) phase plane."""

    X_MAX = 2.0 * math.sqrt(2.0) * math.pi
    P_MAX = 2.5

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.grid = build_grid(
            0.0, self.X_MAX, -self.P_MAX, self.P_MAX, config.nx, config.ny,
            BoundaryKind.PERIODIC, BoundaryKind.ZERO,
        )
        self.params = RvmParams.standard(self.grid.dx, config.dt)
        peak = (1.0 + self.params.eps) / (math.sqrt(2.0 * np.pi) * self.params.v_th)
        self.bounds = LimiterBounds(0.0, peak)

    def initial(self) -> ScenarioState:
        pr = self.params
        lx = self.grid.lx

        def f0(x, p):
            maxw = np.exp(-(p**2) / (2.0 * pr.v_th**2)) / (
                math.sqrt(2.0 * np.pi) * pr.v_th
            )
            return maxw * (1.0 + pr.eps * np.cos(2.0 * np.pi * (x + self.grid.dx) / lx))

        fld = init_cell_averages(self.grid, f0, self.config.quad_order)
        x = self.grid.x_centers()
        dt = self.config.dt
        amp = pr.q_amp
        phase = pr.k0 * x
        em = fields.MaxwellState(
            ey=amp * np.cos(phase + 0.5 * pr.omega0 * dt),
            ez=amp * np.sin(phase + 0.5 * pr.omega0 * dt),
            by=-(pr.ks * amp / pr.omega_s) * np.sin(phase),
            bz=(pr.ks * amp / pr.omega_s) * np.cos(phase),
            ay=-(amp / pr.omega_s) * np.sin(phase),
            az=(amp / pr.omega_s) * np.cos(phase),
            ex=fields.ex_update(
                "gauss", self._density(fld), None, None, 0.0, self.grid.dx
            ),
            omega_p=1.0,
            time=0.0,
        )
        return ScenarioState(fld, maxwell=em)

    def _density(self, fld: CellField) -> np.ndarray:
        return fld.values.sum(axis=1) * self.grid.dy

    def _moments(self, fld: CellField, a2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(rho_gamma, current); midpoint rule over the momentum cells."""
        p = self.grid.y_centers()
        gamma = np.sqrt(1.0 + p[None, :] ** 2 + a2[:, None])
        rho_g = (fld.values / gamma).sum(axis=1) * self.grid.dy
        cur = (fld.values * p[None, :] / gamma).sum(axis=1) * self.grid.dy
        return rho_g, cur

    def advance(self, state: ScenarioState) -> ScenarioState:
        cfg = self.config
        fld, em = state.fld, state.maxwell
        grid = self.grid
        dt = cfg.dt
        t_new = fld.time + dt

        a2_n = em.a_squared()
        rho_g, _ = self._moments(fld, a2_n)
        em_new = fields.maxwell_step(em, rho_g, dt, grid.dx)
        ay_half = 0.5 * (em.ay + em_new.ay)
        az_half = 0.5 * (em.az + em_new.az)
        a2_half = ay_half**2 + az_half**2

        # predictor: point update over dt/2 with the level-n force
        samp = self._force_samplers(em.ex, a2_n)
        xc, pc = grid.center_mesh()
        centers = np.column_stack([xc.ravel(), pc.ravel()])
        half = characteristics.backtrack_rvm(centers, *samp, 0.5 * dt)
        f_star = bsl_step(fld, half.reshape(grid.nx, grid.ny, 2), cfg.half_degree)

        _, j_mid = self._moments(f_star, a2_half)
        ex_new = fields.ex_update("ampere", None, j_mid, em.ex, dt, grid.dx)
        ex_half = 0.5 * (em.ex + ex_new)

        # corrector: full-step transport with the midpoint force
        samp_half = self._force_samplers(ex_half, a2_half)
        back = lambda pts: characteristics.backtrack_rvm(pts, *samp_half, dt)
        if cfg.method in ("ccsl", "ccsl_improved"):
            corners = cascade2d.backtrack_corner_map(grid, back, cfg.half_degree)
            new = cascade2d.ccsl_step(fld, corners, cfg.ccsl_options(self.bounds, self.grid), t_new)
        elif cfg.method == "bsl":
            full = back(centers)
            new = bsl_step(fld, full.reshape(grid.nx, grid.ny, 2), cfg.half_degree)
            new = new.with_values(new.values, t_new)
        else:
            raise ConfigError("split schemes are not wired for the rvm model")

        if cfg.ex_mode == "gauss":
            ex_new = fields.ex_update(
                "gauss", self._density(new), None, None, 0.0, grid.dx
            )
        resid = fields.gauss_residual(ex_new, self._density(new), grid.dx)
        em_new = replace(em_new, ex=ex_new)
        new.check_finite()
        return replace(state, fld=new, maxwell=em_new, gauss_residual=resid)

    def _force_samplers(self, ex: np.ndarray, a2: np.ndarray):
        g = self.grid
        grad = (np.roll(a2, -1) - np.roll(a2, 1)) / (2.0 * g.dx)
        mk = lambda arr: characteristics.LinearSampler1D(g.x_min, g.dx, g.nx, arr)
        return mk(ex), mk(a2), mk(grad)

    def energy(self, state: ScenarioState) -> float:
        em = state.maxwell
        p = self.grid.y_centers()
        gamma = np.sqrt(1.0 + p[None, :] ** 2 + em.a_squared()[:, None])
        kinetic = float(((gamma - 1.0) * state.fld.values).sum()) * self.grid.cell_area
        field_e = 0.5 * float(
            (em.ex**2 + em.ey**2 + em.ez**2 + em.by**2 + em.bz**2).sum()
        ) * self.grid.dx
        return kinetic + field_e

    def exact_values(self, t: float) -> np.ndarray | None:
        return None


def make_scenario(config: ScenarioConfig):
    if config.model in ("rotation", "swirling", "swirling_discontinuous"):
        return LinearAdvectionScenario(config)
    if config.model in ("diocotron", "modified_gc_uniform", "modified_gc_vortex"):
        return GuidingCenterScenario(config)
    if config.model == "rvm":
        return RvmScenario(config)
    raise ConfigError(f"unknown model {config.model!r}")


def init_scenario(config: ScenarioConfig) -> ScenarioState:
    return make_scenario(config).initial()


def run_scenario(
    config: ScenarioConfig,
    on_step: Callable[[ScenarioState], None] | None = None,
) -> tuple[ScenarioState, DiagnosticsSeries]:
    """Drive one scenario to t_end, recording diagnostics each step."""
    scen = make_scenario(config)
    state = scen.initial()
    series = DiagnosticsSeries()
    series.record(state.fld, scen.energy(state))
    nsteps = int(round(config.t_end / config.dt))
    for _ in range(nsteps):
        state = scen.advance(state)
        series.record(state.fld, scen.energy(state))
        if on_step is not None:
            on_step(state)
    return state, series
