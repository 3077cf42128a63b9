import json
import subprocess
import sys

import numpy as np
import pytest

from cascsl.grid import read_field_binary
from cascsl.harness import PRESETS, main, parse_mesh
from cascsl.errors import ConfigError


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "cascsl.harness", *args],
        capture_output=True,
        text=True,
    )


def test_parse_mesh():
    assert parse_mesh("128") == (128, 128)
    assert parse_mesh("128x64") == (128, 64)
    with pytest.raises(ConfigError):
        parse_mesh("12a")


def test_help_exits_zero():
    proc = run_cli("--help")
    assert proc.returncode == 0
    assert "cascsl" in proc.stdout


def test_presets_loaded_from_files():
    assert "rotation_table1" in PRESETS
    assert PRESETS["diocotron_desk"]["mesh"] == "256"


def test_missing_settings_exit_two(tmp_path):
    proc = run_cli("run", "--scenario", "rotation", "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "missing settings" in proc.stderr


def test_run_writes_artifacts(tmp_path):
    rc = main([
        "run", "--scenario", "rotation", "--mesh", "40", "--dt", "0.25",
        "--t-end", "0.5", "--method", "ccsl_improved",
        "--snapshots", "0,0.5", "--out", str(tmp_path),
    ])
    assert rc == 0
    diag = (tmp_path / "diagnostics.csv").read_text().splitlines()
    assert diag[0] == "t,mass,l1,l2,energy"
    assert len(diag) == 4  # t = 0, 0.25, 0.5
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["model"] == "rotation"
    assert manifest["aborted"] is None
    nx, ny, t, vals = read_field_binary(str(tmp_path / "snapshot_t0.5.bin"))
    assert (nx, ny) == (40, 40)
    assert t == pytest.approx(0.5)
    assert np.isfinite(vals).all()


def test_run_is_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        rc = main([
            "run", "--scenario", "modified_gc_vortex", "--mesh", "32x16",
            "--dt", "1.0", "--t-end", "3", "--out", str(out),
        ])
        assert rc == 0
    assert (out1 / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()


def test_numerical_abort_exit_three_with_artifacts(tmp_path):
    rc = main([
        "run", "--scenario", "modified_gc_uniform", "--mesh", "64x32",
        "--dt", "1.0", "--t-end", "20", "--method", "ccsl", "--out", str(tmp_path),
    ])
    assert rc == 3
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["aborted"] is not None
    assert manifest["unstable"] is True
    # last-good snapshot flushed on the abort path
    assert (tmp_path / "snapshot_abort.bin").exists()
    assert (tmp_path / "diagnostics.csv").exists()


def test_sweep_writes_convergence_artifacts(tmp_path):
    rc = main([
        "sweep", "--scenario", "rotation", "--meshes", "40,80", "--dt", "0.25",
        "--t-end", "1.0", "--method", "ccsl_improved", "--out", str(tmp_path),
    ])
    assert rc == 0
    text = (tmp_path / "convergence.txt").read_text()
    assert "order" in text and "reference" in text
    data = json.loads((tmp_path / "convergence.json").read_text())
    assert data["meshes"] == [40, 80]
    assert len(data["orders"]) == 1


def test_sweep_empty_meshes_is_config_error(tmp_path):
    rc = main([
        "sweep", "--scenario", "rotation", "--meshes", "", "--dt", "0.25",
        "--t-end", "1.0", "--out", str(tmp_path),
    ])
    assert rc == 2


def test_config_file_round(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nscenario = rotation\nmesh = 40\ndt = 0.25\nt_end = 0.25\n")
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 0
