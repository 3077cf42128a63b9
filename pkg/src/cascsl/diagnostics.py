"""Conserved-quantity tracking, error norms, and convergence orders."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError
from .grid import CellField


@dataclass
class DiagnosticsSeries:
    """Time series of mass, L1, L2, and total energy."""

    times: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    l1: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)

    def record(self, fld: CellField, energy: float = 0.0) -> None:
        area = fld.grid.cell_area
        if self.times and fld.time <= self.times[-1]:
            raise GridError("diagnostics times must be strictly increasing")
        self.times.append(fld.time)
        self.mass.append(float(fld.values.sum()) * area)
        self.l1.append(float(np.abs(fld.values).sum()) * area)
        self.l2.append(math.sqrt(float((fld.values**2).sum()) * area))
        self.energy.append(float(energy))

    def relative_deviation(self, name: str) -> np.ndarray:
        """(q(t) - q(0)) / |q(0)|; zero reference falls back to absolute."""
        q = np.asarray(getattr(self, name), dtype=float)
        ref = abs(q[0]) if q.size and q[0] != 0.0 else 1.0
        return (q - q[0]) / ref

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("t,mass,l1,l2,energy\n")
            for row in zip(self.times, self.mass, self.l1, self.l2, self.energy):
                fh.write(",".join(repr(v) for v in row) + "\n")


def l2_error(fld: CellField, exact_values: np.ndarray) -> float:
    """Discrete L2 norm of (f - exact), both as cell averages."""
    if exact_values.shape != fld.values.shape:
        raise GridError(
            f"exact field shape {exact_values.shape} != {fld.values.shape}"
        )
    return math.sqrt(float(((fld.values - exact_values) ** 2).sum()) * fld.grid.cell_area)


@dataclass(frozen=True)
class ConvergenceReport:
    meshes: tuple[int, ...]
    errors: tuple[float, ...]
    orders: tuple[float, ...]  # one fewer than meshes

    def as_text(self, reference: dict[int, float] | None = None) -> str:
        lines = ["mesh      L2 error     order" + ("    reference" if reference else "")]
        for i, (m, e) in enumerate(zip(self.meshes, self.errors)):
            order = f"{self.orders[i - 1]:5.2f}" if i > 0 else "   --"
            ref = f"    {reference[m]:.3e}" if reference and m in reference else ""
            lines.append(f"{m:4d}    {e:.4e}   {order}{ref}")
        return "\n".join(lines)

    def as_json(self) -> str:
        return json.dumps(
            {"meshes": list(self.meshes), "errors": list(self.errors),
             "orders": list(self.orders)},
            indent=2,
        )


def convergence_orders(meshes: list[int], errors: list[float]) -> ConvergenceReport:
    """order_k = log2(e_{k-1}/e_k); meshes must double."""
    if len(meshes) < 2 or len(meshes) != len(errors):
        raise GridError("need at least two (mesh, error) pairs")
    for a, b in zip(meshes, meshes[1:]):
        if b != 2 * a:
            raise GridError(f"meshes must double: {a} -> {b}")
    orders = tuple(
        math.log2(errors[k - 1] / errors[k]) for k in range(1, len(errors))
    )
    return ConvergenceReport(tuple(meshes), tuple(errors), orders)
