"""Conservative cascade semi-Lagrangian transport toolkit.

2D mass-conservative transport by cascade remapping with a
freestream-preserving volume correction and a maximum-principle blending
limiter, plus baseline schemes (point-wise backward SL, dimensionally
split SL) and the benchmark models they are compared on: linear
advection, the guiding-center plasma model, and the 1D relativistic
Vlasov-Maxwell system.
"""

__version__ = "0.1.0"

from .cascade2d import CcslOptions, ccsl_step, validity_check
from .grid import BoundaryKind, CellField, Grid2D, build_grid, init_cell_averages
from .recon1d import LimiterBounds, MassProfile, csl_remap, limited_remap
from .scenarios import ScenarioConfig, init_scenario, make_scenario, run_scenario

__all__ = [
    "BoundaryKind",
    "CcslOptions",
    "CellField",
    "Grid2D",
    "LimiterBounds",
    "MassProfile",
    "ScenarioConfig",
    "build_grid",
    "ccsl_step",
    "csl_remap",
    "init_cell_averages",
    "init_scenario",
    "limited_remap",
    "make_scenario",
    "run_scenario",
    "validity_check",
]
