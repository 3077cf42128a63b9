import numpy as np
import pytest

from cascsl.diagnostics import DiagnosticsSeries, convergence_orders, l2_error
from cascsl.errors import GridError
from cascsl.grid import CellField, build_grid


def test_record_zero_field():
    g = build_grid(0.0, 1.0, 0.0, 1.0, 8, 8)
    s = DiagnosticsSeries()
    s.record(CellField(g, np.zeros((8, 8))))
    assert s.mass == [0.0] and s.l1 == [0.0] and s.l2 == [0.0] and s.energy == [0.0]


def test_record_unit_field_mass_equals_area():
    g = build_grid(0.0, 16.0, 0.0, 8.0, 32, 16)
    s = DiagnosticsSeries()
    s.record(CellField(g, np.ones((32, 16))))
    assert s.mass[0] == pytest.approx(128.0, rel=1e-14)
    assert s.l1[0] == pytest.approx(128.0, rel=1e-14)
    assert s.l2[0] == pytest.approx(np.sqrt(128.0), rel=1e-14)


def test_mass_equals_l1_for_nonnegative():
    g = build_grid(0.0, 1.0, 0.0, 1.0, 8, 8)
    s = DiagnosticsSeries()
    s.record(CellField(g, np.abs(np.random.default_rng(0).normal(size=(8, 8)))))
    assert s.mass[0] == pytest.approx(s.l1[0], rel=1e-15)


def test_relative_deviation_zero_at_start():
    g = build_grid(0.0, 1.0, 0.0, 1.0, 8, 8)
    s = DiagnosticsSeries()
    s.record(CellField(g, np.ones((8, 8)), 0.0), energy=2.0)
    s.record(CellField(g, np.full((8, 8), 1.1), 1.0), energy=2.5)
    dev = s.relative_deviation("mass")
    assert dev[0] == 0.0
    assert dev[1] == pytest.approx(0.1, rel=1e-12)


def test_times_must_increase():
    g = build_grid(0.0, 1.0, 0.0, 1.0, 8, 8)
    s = DiagnosticsSeries()
    s.record(CellField(g, np.ones((8, 8)), 1.0))
    with pytest.raises(GridError):
        s.record(CellField(g, np.ones((8, 8)), 1.0))


def test_series_csv_header(tmp_path):
    g = build_grid(0.0, 1.0, 0.0, 1.0, 8, 8)
    s = DiagnosticsSeries()
    s.record(CellField(g, np.ones((8, 8))), energy=1.0)
    p = tmp_path / "d.csv"
    s.write_csv(str(p))
    lines = p.read_text().splitlines()
    assert lines[0] == "t,mass,l1,l2,energy"
    assert len(lines) == 2


def test_l2_error_basics():
    g = build_grid(0.0, 1.0, 0.0, 1.0, 8, 8)
    vals = np.random.default_rng(1).normal(size=(8, 8))
    f = CellField(g, vals)
    assert l2_error(f, vals.copy()) == 0.0
    with pytest.raises(GridError):
        l2_error(f, np.zeros((4, 4)))


def test_convergence_orders():
    rep = convergence_orders([40, 80], [4.0, 1.0])
    assert rep.orders == (2.0,)

    h = np.array([1 / 40, 1 / 80, 1 / 160])
    rep2 = convergence_orders([40, 80, 160], list(3.0 * h**2))
    np.testing.assert_allclose(rep2.orders, 2.0, atol=1e-12)

    with pytest.raises(GridError):
        convergence_orders([40, 100], [1.0, 0.5])
    with pytest.raises(GridError):
        convergence_orders([40], [1.0])

    text = rep2.as_text({40: 1e-3})
    assert "mesh" in text and "order" in text
    assert rep2.as_json().startswith("{")
