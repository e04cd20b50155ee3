"""Command-line front end: ``slowlight --config run.toml [--mode M] [--out DIR]``.

Artifacts are assembled in a scratch directory next to the target and renamed
into place only when the run succeeds, so a failed run leaves no files.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .config import RunConfig, load_config
from .errors import (ConfigError, ConventionError, DomainError, FiniteEscapeError, GridError,
                     InsufficientAsymptoteError, InvalidParameterError, NoRealRootError, NoStopError,
                     NumericalInstabilityError, QuadratureError)
from .model import SimulationGrid
from .modulation import Exponential
from .soliton import background_field, group_velocity, soliton_center, soliton_fields, stopping_distance
from .solver import Scenario, simulate
from .verify import (adjudicate_conventions, analytic_grids, convergence_study, full_residual_report,
                     measure_trajectory, observed_orders, phi_window_grid)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_NO_ROOT = 4
EXIT_INSTABILITY = 5
EXIT_NO_STOP = 6
EXIT_CONVENTION = 7
EXIT_CHECK_FAILED = 8
EXIT_QUADRATURE = 9
EXIT_ASYMPTOTE = 10

_EXIT_CODES = [
    (ConfigError, EXIT_CONFIG),
    (DomainError, EXIT_DOMAIN),
    (NoRealRootError, EXIT_NO_ROOT),
    (NumericalInstabilityError, EXIT_INSTABILITY),
    (NoStopError, EXIT_NO_STOP),
    (ConventionError, EXIT_CONVENTION),
    ((QuadratureError, FiniteEscapeError), EXIT_QUADRATURE),
    (InsufficientAsymptoteError, EXIT_ASYMPTOTE),
    ((InvalidParameterError, GridError), EXIT_CONFIG),
]

ORDER_BAND = (1.7, 2.3)
CENTRAL_LIMIT = 1e-6
RESIDUAL_FLOOR = 1e-12
STOPPING_TOL = 0.03


def exit_code_for(exc: BaseException) -> int:
    for kinds, code in _EXIT_CODES:
        if isinstance(exc, kinds):
            return code
    return EXIT_OTHER


def failure_report(exc: BaseException, code: int) -> dict:
    rep = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "tau_escape", "last_stable_zeta", "tail_estimate", "achieved", "index"):
        value = getattr(exc, attr, None)
        if value is not None:
            rep[attr] = float(value) if isinstance(value, (float, np.floating)) else value
    if isinstance(exc, ConventionError) and exc.candidates:
        rep["candidates"] = [c.label for c in exc.candidates]
    return rep


# -- modes -------------------------------------------------------------------------------

def _stored_grid(grid: SimulationGrid, stride: int) -> SimulationGrid:
    return grid.replace(n_zeta=(grid.n_zeta - 1) // stride + 1)


def _export(result, sol, work: Path, cfg: RunConfig) -> dict:
    """Grids, slices and plot tables for one field data set; returns a small summary."""
    if "binary" in cfg.formats:
        io.write_grids(result, work / "grids")
    if "csv" in cfg.formats:
        (work / "slices").mkdir()
        rows = sorted({0, (result.zeta.size - 1) // 2, result.zeta.size - 1})
        for r in rows:
            io.write_slice_csv(work / "slices" / f"slice_{r:06d}.csv", result, r)
    traj = None
    try:
        traj = measure_trajectory(result)
    except InvalidParameterError:
        pass
    if "plot" in cfg.formats:
        (work / "plot").mkdir()
        io.write_heatmap(work / "plot" / "heatmap.dat", result.zeta, result.tau, np.abs(result.omega_a))
        if traj is not None:
            io.write_table(work / "plot" / "trajectory.dat", "tau zeta_center velocity",
                           [traj.tau, traj.center, traj.velocity])
        ctrl = background_field(sol, result.tau, "ahead")
        io.write_table(work / "plot" / "control.dat", "tau re_omega im_omega",
                       [result.tau, np.real(ctrl), np.imag(ctrl)])
    return {"trajectory": traj}


def _velocity_summary(traj, sol) -> dict:
    v = traj.velocity
    ok = np.isfinite(v)
    if not np.any(ok):
        return {"samples": 0}
    exact = group_velocity(sol, traj.tau[ok]).v
    dev = np.abs(v[ok] - exact)
    return {"samples": int(ok.sum()), "median_measured": float(np.median(v[ok])),
            "median_exact": float(np.median(exact)),
            "max_rel_deviation": float(np.max(dev) / np.max(np.abs(exact)))}


def _run_analytic(cfg: RunConfig, work: Path, threads: int) -> dict:
    sol = cfg.solution()
    grid, stride = cfg.simulation_grid(sol)
    data = analytic_grids(sol, _stored_grid(grid, stride))
    out = _export(data, sol, work, cfg)
    rep = {"grid": data.grid.to_dict(),
           "max_norm_deviation": float(np.max(data.norm_deviation))}
    if out["trajectory"] is not None:
        rep["velocity"] = _velocity_summary(out["trajectory"], sol)
    return rep


def _simulate(cfg, threads):
    sol = cfg.solution()
    grid, stride = cfg.simulation_grid(sol)
    sc = Scenario.from_soliton(sol, grid, stride=stride)
    return sol, sc, simulate(sc, threads=threads)


def _run_simulate(cfg: RunConfig, work: Path, threads: int) -> dict:
    sol, sc, res = _simulate(cfg, threads)
    out = _export(res, sol, work, cfg)
    ref = soliton_fields(sol, res.zeta[:, None], res.tau[None, :])
    peak = float(np.max(np.abs(ref.omega_a)))
    err = max(np.max(np.abs(res.omega_a - ref.omega_a)), np.max(np.abs(res.omega_b - ref.omega_b))) / peak
    rep = {"grid": sc.grid.to_dict(), "stride": sc.stride,
           "max_norm_deviation": float(np.nanmax(res.norm_deviation)),
           "relative_error_vs_analytic": float(err)}
    if sol.params.gamma != 0:
        rep["note"] = "gamma != 0: the analytic family is only a reference shape here"
    if out["trajectory"] is not None:
        rep["velocity"] = _velocity_summary(out["trajectory"], sol)
    return rep


def _run_stopping(cfg: RunConfig, work: Path, threads: int) -> dict:
    sol, sc, res = _simulate(cfg, threads)
    _export(res, sol, work, cfg)
    t0, t1 = cfg.stopping_window
    traj = measure_trajectory(res, t0, t1)
    total = stopping_distance(sol.profile, sol.params.k)
    window = float(np.diff(soliton_center(sol, np.array([traj.tau_start, traj.tau_end])))[0])
    rel = abs(traj.travel_distance - total) / total
    rep = {"analytic_distance": total, "analytic_window_distance": window,
           "measured_distance": traj.travel_distance, "measurement_uncertainty": traj.uncertainty,
           "relative_error": rel, "tolerance": STOPPING_TOL, "passed": bool(rel <= STOPPING_TOL),
           "trajectory": traj.to_dict(), "grid": sc.grid.to_dict(), "stride": sc.stride}
    return rep


def _order_ok(errors) -> tuple[list[float], bool]:
    orders = observed_orders(errors)
    ok = all(ORDER_BAND[0] <= o <= ORDER_BAND[1] or errors[i + 1] <= RESIDUAL_FLOOR
             for i, o in enumerate(orders) if not (errors[i] <= RESIDUAL_FLOOR))
    return orders, ok


def _run_verify(cfg: RunConfig, work: Path, threads: int) -> dict:
    sol = cfg.solution()
    probe = SimulationGrid(-3.0, 3.0, 101, 3.0, 101, zeta_min=-3.0)
    probe_profile = "config"
    try:
        adj = adjudicate_conventions(sol.params, sol.profile, probe, sol.phi0)
    except ConventionError as err:
        # a profile with m' = 0 cannot tell the variants apart; settle it on a modulated probe
        if len(err.candidates) < 2:
            raise
        adj = adjudicate_conventions(sol.params, Exponential(1.0), probe, sol.phi0)
        if adj.variant not in err.candidates:
            raise
        probe_profile = "exponential(alpha=1)"
    sol = sol.with_convention(adj.variant)
    n = cfg.verify_n
    reports = []
    for level in range(3):
        nn = (n - 1) * 2 ** level + 1
        grid = phi_window_grid(sol, cfg.verify_tau[0], cfg.verify_tau[1], cfg.verify_phi_span, nn, nn)
        reports.append(full_residual_report(sol, grid))
    entries = {}
    passed = True
    for e in reports[0].entries:
        series = [r[e.equation].max_abs for r in reports]
        if e.equation.startswith("central"):
            ok = all(v <= CENTRAL_LIMIT for v in series)
            entries[e.equation] = {"max_abs": series, "threshold": CENTRAL_LIMIT, "passed": ok}
        else:
            orders, ok = _order_ok(series)
            entries[e.equation] = {"max_abs": series, "orders": orders, "passed": ok}
        passed &= ok
    io.write_report(work / "residuals", reports[-1].to_dict())
    return {"convention": adj.to_dict(), "adjudication_profile": probe_profile,
            "grid_sizes": [(n - 1) * 2 ** i + 1 for i in range(3)], "entries": entries, "order_band": list(ORDER_BAND), "passed": bool(passed)}


def _run_convergence(cfg: RunConfig, work: Path, threads: int) -> dict:
    sol = cfg.solution()
    grid, stride = cfg.simulation_grid(sol)
    sc = Scenario.from_soliton(sol, grid, stride=stride)
    rep = convergence_study(sc, cfg.convergence_levels, solver=lambda s: simulate(s, threads=threads))
    if "plot" in cfg.formats:
        (work / "plot").mkdir()
        io.write_table(work / "plot" / "convergence.dat", "h_tau h_zeta relative_error",
                       [rep.h_tau, rep.h_zeta, rep.errors])
    out = rep.to_dict()
    out["passed"] = bool(not rep.flagged and all(ORDER_BAND[0] <= o <= ORDER_BAND[1] for o in rep.self_orders))
    return out


MODE_RUNNERS = {"analytic": _run_analytic, "simulate": _run_simulate, "verify": _run_verify,
                "stopping": _run_stopping, "convergence": _run_convergence}


# -- orchestration -----------------------------------------------------------------------

def _write_top_manifest(work: Path, cfg: RunConfig) -> None:
    entries = {"config_sha256": cfg.digest(), "version": __version__, "mode": cfg.mode,
               "name": cfg.name, "convention": cfg.solution().convention.label}
    for path in sorted(p for p in work.rglob("*") if p.is_file()):
        entries[f"sha256.{path.relative_to(work).as_posix()}"] = io.sha256_file(path)
    io.write_manifest(work / "manifest.txt", entries)


def run(cfg: RunConfig, out: str | Path | None = None, threads: int = 1, force: bool = False) -> int:
    """Execute ``cfg`` and publish its artifacts atomically; returns the exit status."""
    target = Path(out or cfg.out or f"runs/{cfg.name}")
    if target.exists() and not force:
        raise ConfigError(f"output directory {target} exists (use --force to replace it)")
    target.parent.mkdir(parents=True, exist_ok=True)
    work = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        report = MODE_RUNNERS[cfg.mode](cfg, work, threads)
        passed = report.get("passed", True)
        report = {"status": "ok" if passed else "check_failed", "mode": cfg.mode, "name": cfg.name,
                  "params": cfg.params.to_dict(), **report}
        io.write_report(work / "report", report)
        (work / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")
        _write_top_manifest(work, cfg)
        if target.exists():
            shutil.rmtree(target)
        work.rename(target)
    except BaseException:
        shutil.rmtree(work, ignore_errors=True)
        raise
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slowlight", description="Slow-light soliton runs from a TOML config.")
    p.add_argument("--config", required=True, help="run configuration (TOML)")
    p.add_argument("--mode", choices=sorted(MODE_RUNNERS), help="override the config's mode")
    p.add_argument("--out", help="artifact directory (default: config 'out' or runs/<name>)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the field march")
    p.add_argument("--seed", type=int, default=None, help="reserved; every mode is deterministic")
    p.add_argument("--force", action="store_true", help="replace an existing output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config, mode=args.mode)
        code = run(cfg, out=args.out, threads=args.threads, force=args.force)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a report
        code = exit_code_for(exc)
        json.dump(failure_report(exc, code), sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return code
    if code == EXIT_CHECK_FAILED:
        json.dump({"status": "check_failed", "exit_code": code}, sys.stderr)
        sys.stderr.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
