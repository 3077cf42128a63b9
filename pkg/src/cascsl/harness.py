"""Command-line entry point: single runs, convergence sweeps, artifacts.

Exit codes: 0 success, 2 configuration error, 3 numerical abort (the last
completed step's diagnostics and snapshot are flushed before exiting).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import asdict


from . import __version__
from .diagnostics import DiagnosticsSeries, convergence_orders, l2_error
from .errors import CascslError, ConfigError, NumericsError, OrderingError, ValidityError
from .grid import write_field_binary, write_field_csv
from .scenarios import (
    METHODS,
    MODELS,
    ScenarioConfig,
    make_scenario,
    run_scenario,
)

#: Paper-reported L2 errors for the two linear-advection convergence tables
#: (t = 1 columns), used for side-by-side sweep reports.
TABLE1_REFERENCE = {40: 5.39e-3, 80: 5.83e-4, 160: 1.45e-4, 320: 3.63e-5}
TABLE2_REFERENCE = {40: 3.55e-2, 80: 6.07e-3, 160: 1.40e-3, 320: 3.45e-4}


def _load_presets() -> dict[str, dict]:
    """Checked-in preset files, one INI per benchmark experiment."""
    here = os.path.join(os.path.dirname(__file__), "presets")
    presets = {}
    for name in sorted(os.listdir(here)):
        if name.endswith(".ini"):
            cp = configparser.ConfigParser()
            cp.read(os.path.join(here, name))
            presets[name[:-4]] = dict(cp["run"])
    return presets


PRESETS: dict[str, dict] = _load_presets()


def parse_mesh(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        if len(parts) == 1:
            n = int(parts[0])
            return n, n
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ConfigError(f"bad mesh spec {text!r} (want NX or NXxNY)")


def _bool_flag(text: str) -> bool:
    if text in ("on", "true", "1", "yes"):
        return True
    if text in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"expected on|off, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cascsl",
        description="Conservative cascade semi-Lagrangian transport benchmarks",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write artifacts")
    _add_common(run)
    run.add_argument("--snapshots", default=None,
                     help="comma-separated times for field snapshots")

    sweep = sub.add_parser("sweep", help="convergence sweep over doubling meshes")
    _add_common(sweep)
    sweep.add_argument("--meshes", default=None,
                       help="comma-separated doubling mesh list (default 40,80,160,320)")
    return p


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default=None, choices=sorted(PRESETS),
                   help="start from a named preset")
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--scenario", default=None, choices=MODELS)
    p.add_argument("--mesh", default=None, help="NX or NXxNY")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--method", default=None, choices=METHODS)
    p.add_argument("--degree", type=int, default=None,
                   help="half-degree d of the reconstruction (default 2)")
    p.add_argument("--limiter", default=None, help="on|off (default: per method)")
    p.add_argument("--freestream", default=None, help="on|off (default: per method)")
    p.add_argument("--ex-mode", dest="ex_mode", default=None,
                   choices=("ampere", "gauss"))
    p.add_argument("--predictor", default=None, choices=("bsl", "ccsl"),
                   help="field-refresh transport for predictor-corrector models")
    p.add_argument("--substeps", type=int, default=None)
    p.add_argument("--out", default="out", help="artifact directory")


def load_settings(args: argparse.Namespace) -> dict:
    """Merge preset < config file < command-line flags."""
    settings: dict = {}
    if args.preset:
        settings.update(PRESETS[args.preset])
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        cp = configparser.ConfigParser()
        cp.read(args.config)
        if "run" not in cp:
            raise ConfigError("config file needs a [run] section")
        settings.update(dict(cp["run"]))
    for key in ("scenario", "mesh", "dt", "t_end", "method", "degree",
                "limiter", "freestream", "ex_mode", "substeps", "predictor"):
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if getattr(args, "snapshots", None) is not None:
        settings["snapshots"] = args.snapshots
    if getattr(args, "meshes", None) is not None:
        settings["meshes"] = args.meshes
    return settings


def scenario_config(settings: dict, mesh: tuple[int, int] | None = None) -> ScenarioConfig:
    required = [k for k in ("scenario", "dt", "t_end") if k not in settings]
    if "mesh" not in settings and mesh is None:
        required.append("mesh")
    if required:
        raise ConfigError(f"missing settings: {', '.join(required)}")
    nx, ny = mesh if mesh is not None else parse_mesh(str(settings["mesh"]))
    limiter = settings.get("limiter")
    freestream = settings.get("freestream")
    return ScenarioConfig(
        model=str(settings["scenario"]),
        nx=nx,
        ny=ny,
        dt=float(settings["dt"]),
        t_end=float(settings["t_end"]),
        method=str(settings.get("method", "ccsl_improved")),
        half_degree=int(settings.get("degree", 2)),
        limiter=None if limiter is None else _bool_flag(str(limiter)),
        freestream=None if freestream is None else _bool_flag(str(freestream)),
        substeps=None if settings.get("substeps") is None else int(settings["substeps"]),
        ex_mode=str(settings.get("ex_mode", "ampere")),
        predictor=str(settings.get("predictor", "bsl")),
    )


def _write_manifest(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    os.replace(tmp, path)


def cmd_run(args: argparse.Namespace) -> int:
    settings = load_settings(args)
    config = scenario_config(settings)
    snap_times: list[float] = []
    if settings.get("snapshots"):
        snap_times = sorted(float(s) for s in str(settings["snapshots"]).split(","))
    os.makedirs(args.out, exist_ok=True)

    scen = make_scenario(config)
    state = scen.initial()
    series = DiagnosticsSeries()
    series.record(state.fld, scen.energy(state))
    written: list[str] = []
    aborted: str | None = None
    unstable = False
    t_start = time.time()

    def flush_snapshot(tag: str) -> None:
        base = os.path.join(args.out, f"snapshot_{tag}")
        write_field_csv(state.fld, base + ".csv")
        write_field_binary(state.fld, base + ".bin")
        written.append(base + ".csv")
        written.append(base + ".bin")

    pending = list(snap_times)
    if pending and math.isclose(pending[0], 0.0, abs_tol=1e-12):
        flush_snapshot("t0")
        pending.pop(0)
    nsteps = int(round(config.t_end / config.dt))
    try:
        for _ in range(nsteps):
            state = scen.advance(state)
            series.record(state.fld, scen.energy(state))
            unstable = unstable or state.unstable
            while pending and state.fld.time >= pending[0] - 1e-9:
                flush_snapshot(f"t{pending[0]:g}")
                pending.pop(0)
    except (ValidityError, OrderingError, NumericsError) as exc:
        aborted = f"{type(exc).__name__}: {exc}"
        unstable = True
        flush_snapshot("abort")

    diag_path = os.path.join(args.out, "diagnostics.csv")
    series.write_csv(diag_path)
    final_error = None
    exact = scen.exact_values(state.fld.time) if aborted is None else None
    if exact is not None:
        final_error = l2_error(state.fld, exact)
    manifest = {
        "version": __version__,
        "config": asdict(config),
        "settings": {k: str(v) for k, v in settings.items()},
        "wall_clock_s": time.time() - t_start,
        "diagnostics": diag_path,
        "snapshots": written,
        "snapshot_schedule": snap_times,
        "final_time": state.fld.time,
        "final_l2_error": final_error,
        "aborted": aborted,
        "unstable": unstable,
        "gauss_residual": state.gauss_residual,
        "design_flags": {
            "predictor_transport": config.predictor,
            "split_ordering": "strang-x-y-x",
            "rvm_gamma_a2_level": "half-step average",
            "limiter_bounds": "initial extrema, frozen",
            "row_sweep_coordinate": "cumulative strip volume",
        },
    }
    _write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    if final_error is not None:
        print(f"final L2 error: {final_error:.6e}")
    if aborted:
        print(f"numerical abort: {aborted}", file=sys.stderr)
        return 3
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = load_settings(args)
    mesh_text = str(settings.get("meshes", "40,80,160,320"))
    try:
        meshes = [int(m) for m in mesh_text.split(",") if m.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad mesh list {mesh_text!r}") from exc
    if not meshes:
        raise ConfigError("empty mesh list")
    os.makedirs(args.out, exist_ok=True)
    errors: list[float] = []
    failures: dict[int, str] = {}
    for m in meshes:
        config = scenario_config(settings, mesh=(m, m))
        try:
            scen = make_scenario(config)
            state, _ = run_scenario(config)
            exact = scen.exact_values(state.fld.time)
            if exact is None:
                raise ConfigError(
                    f"scenario {config.model!r} has no exact solution to sweep against"
                )
            errors.append(l2_error(state.fld, exact))
        except CascslError as exc:
            failures[m] = f"{type(exc).__name__}: {exc}"
            errors.append(float("nan"))
    ok = [(m, e) for m, e in zip(meshes, errors) if math.isfinite(e)]
    if len(ok) >= 2:
        report = convergence_orders([m for m, _ in ok], [e for _, e in ok])
    else:
        raise ConfigError("not enough successful runs for a convergence report")

    reference = None
    if settings.get("scenario") == "rotation":
        reference = TABLE1_REFERENCE
    elif settings.get("scenario") == "swirling":
        reference = TABLE2_REFERENCE
    text = report.as_text(reference)
    if failures:
        text += "\nfailed runs: " + "; ".join(f"{m}: {msg}" for m, msg in failures.items())
    print(text)
    with open(os.path.join(args.out, "convergence.txt"), "w") as fh:
        fh.write(text + "\n")
    with open(os.path.join(args.out, "convergence.json"), "w") as fh:
        fh.write(report.as_json())
    _write_manifest(
        os.path.join(args.out, "manifest.json"),
        {
            "version": __version__,
            "settings": {k: str(v) for k, v in settings.items()},
            "meshes": meshes,
            "errors": errors,
            "orders": list(report.orders),
            "failures": failures,
        },
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except CascslError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
