"""Experiment orchestration: sweeps, CSV output and the run manifest.

Each pipeline expands a config into independent sweep points, executes them
(in parallel up to the worker budget, one output file per point) and writes
a manifest listing every produced file with its status.  A diverged point is
recorded, its truncated output kept, and the remaining points still run.
Numerics inside a point are deterministic, and manifest/record ordering is
fixed by sorting, so re-running a config byte-reproduces every CSV.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .bath import BathSpec, tabulate
from .config import SimulationConfig
from .dynmaps import KernelTrajectory, ModelSpec, get_solver
from .observables import (
    evolve_expectations,
    regression_correlation,
    spectrum_cz,
    steady_state,
    susceptibility_and_transmission,
)
from .qops import SIGMA_X, SIGMA_Z

__all__ = ["RunRecord", "RunManifest", "run_dynamics", "run_steady_sweep",
           "run_spectrum", "run_transmission_map", "write_manifest", "read_manifest"]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RunRecord:
    kind: str
    method: str
    alpha: float
    status: str            # completed | diverged at t | failed: <reason>
    wall_time: float
    file: str


@dataclass
class RunManifest:
    config_echo: str
    version: str
    records: list = field(default_factory=list)

    @property
    def n_diverged(self) -> int:
        return sum(r.status.startswith("diverged") for r in self.records)

    @property
    def n_failed(self) -> int:
        return sum(r.status.startswith("failed") for r in self.records)

    def exit_code(self) -> int:
        if self.n_failed:
            return 1
        if self.n_diverged:
            return 2
        return 0


def write_manifest(manifest: RunManifest, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"version = {manifest.version}\n")
        for line in manifest.config_echo.splitlines():
            fh.write(f"config.{line}\n")
        for i, rec in enumerate(sorted(manifest.records, key=lambda r: (r.kind, r.method, r.alpha))):
            for key, val in asdict(rec).items():
                fh.write(f"run.{i}.{key} = {val}\n")


def read_manifest(path: str) -> RunManifest:
    version = ""
    config_lines = []
    runs: dict[int, dict] = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("version = "):
                version = line[len("version = "):]
            elif line.startswith("config."):
                config_lines.append(line[len("config."):])
            elif line.startswith("run."):
                head, _, val = line.partition(" = ")
                _, idx, key = head.split(".", 2)
                runs.setdefault(int(idx), {})[key] = val
    records = [
        RunRecord(
            kind=r["kind"],
            method=r["method"],
            alpha=float(r["alpha"]),
            status=r["status"],
            wall_time=float(r["wall_time"]),
            file=r["file"],
        )
        for _, r in sorted(runs.items())
    ]
    return RunManifest(config_echo="\n".join(config_lines), version=version, records=records)


def _config_echo(cfg: SimulationConfig) -> str:
    lines = [
        f"model.delta = {cfg.model.delta!r}",
        f"model.epsilon = {cfg.model.epsilon!r}",
        f"bath.alpha = {', '.join(repr(a) for a in cfg.bath.alpha)}",
        f"bath.temperature = {cfg.bath.temperature!r}",
        f"method = {', '.join(cfg.methods)}",
        f"grid.dt = {cfg.grid.dt!r}",
        f"grid.t_max = {cfg.grid.t_max!r}",
        f"initial_state = {cfg.initial_state}",
    ]
    if cfg.grid.born_dt is not None:
        lines.append(f"grid.born_dt = {cfg.grid.born_dt!r}")
    return "\n".join(lines)


def _initial_state(name: str) -> np.ndarray:
    if name == "down_z":
        return np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    if name == "up_z":
        return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    return 0.5 * np.eye(2, dtype=complex)


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _alpha_tag(alpha: float) -> str:
    return f"{alpha:g}".replace(".", "p")


def _solve(cfg: SimulationConfig, method: str, alpha: float, t_max: float, dt_2pi: float):
    dt = dt_2pi * TWO_PI
    n = int(round(t_max / dt_2pi))
    spec = BathSpec(alpha=alpha, omega_c=1.0, temperature=cfg.bath.temperature)
    table = tabulate(spec, dt, n)
    model = ModelSpec(delta=cfg.model.delta, epsilon=cfg.model.epsilon)
    traj = get_solver(method)(model, table, dt, n)
    return model, traj


def _point_dynamics(args) -> RunRecord:
    cfg, method, alpha, out_dir = args
    t0 = time.perf_counter()
    fname = f"dynamics_{method}_alpha{_alpha_tag(alpha)}.csv"
    path = os.path.join(out_dir, fname)
    try:
        dt_2pi = cfg.dt_for(method)
        model, traj = _solve(cfg, method, alpha, cfg.grid.t_max, dt_2pi)
        rho0 = _initial_state(cfg.initial_state)
        res = evolve_expectations(traj, rho0, [SIGMA_X, SIGMA_Z], ["sx", "sz"])
        sx, sz = (np.real(s.values) for s in res.series)
        d = res.diagnostics
        with open(path, "w") as fh:
            fh.write("t,sx,sz,trace,min_eig,purity\n")
            for k in range(len(sx)):
                t_2pi = k * traj.dt / TWO_PI
                fh.write(
                    f"{_fmt(t_2pi)},{_fmt(sx[k])},{_fmt(sz[k])},"
                    f"{_fmt(d['trace'].values[k])},{_fmt(d['min_eig'].values[k])},"
                    f"{_fmt(d['purity'].values[k])}\n"
                )
        status = "completed"
        if traj.status == "diverged":
            status = f"diverged at t = {traj.diverged_at / TWO_PI:.6g}"
        return RunRecord("dynamics", method, alpha, status, time.perf_counter() - t0, fname)
    except Exception as exc:  # noqa: BLE001 - per-point isolation by design
        return RunRecord(
            "dynamics", method, alpha, f"failed: {exc}", time.perf_counter() - t0, fname
        )


def _steady_point(args):
    cfg, method, alpha = args
    model, traj = _solve(cfg, method, alpha, cfg.grid.t_max, cfg.dt_for(method))
    if traj.status != "completed":
        raise RuntimeError(f"run diverged at t = {traj.diverged_at / TWO_PI:.6g}")
    rho_s = steady_state(model, traj.kernels, tail_tol=1e-3)
    return (
        float(np.real(np.trace(SIGMA_X @ rho_s))),
        float(np.real(np.trace(SIGMA_Z @ rho_s))),
    )


def _point_steady(args) -> RunRecord:
    cfg, method, out_dir = args
    t0 = time.perf_counter()
    fname = f"steady_{method}.csv"
    path = os.path.join(out_dir, fname)
    rows = []
    worst = "completed"
    for alpha in cfg.bath.alpha:
        try:
            sx, sz = _steady_point((cfg, method, alpha))
            rows.append((alpha, sx, sz))
        except Exception as exc:  # noqa: BLE001
            worst = f"failed: alpha={alpha:g}: {exc}"
    with open(path, "w") as fh:
        fh.write("alpha,sx_steady,sz_steady\n")
        for alpha, sx, sz in rows:
            fh.write(f"{_fmt(alpha)},{_fmt(sx)},{_fmt(sz)}\n")
    return RunRecord("steady", method, -1.0, worst, time.perf_counter() - t0, fname)


def _point_spectrum(args) -> RunRecord:
    cfg, method, alpha, out_dir = args
    t0 = time.perf_counter()
    fname = f"spectrum_{method}_alpha{_alpha_tag(alpha)}.csv"
    path = os.path.join(out_dir, fname)
    try:
        sp = cfg.spectrum
        model, traj = _solve(cfg, method, alpha, sp.t_window, cfg.dt_for(method))
        if traj.status != "completed":
            raise RuntimeError(f"run diverged at t = {traj.diverged_at / TWO_PI:.6g}")
        n_kernel = min(int(round(cfg.grid.t_max / cfg.dt_for(method))), len(traj.kernels.kernels) - 1)
        ktrunc = KernelTrajectory(
            dt=traj.kernels.dt,
            kernels=traj.kernels.kernels[: n_kernel + 1],
            method=method,
            form=traj.kernels.form,
        )
        rho_s = steady_state(model, ktrunc, tail_tol=1e-3)
        f = regression_correlation(traj, model.coupling_operator, rho_s)
        omegas = np.linspace(sp.omega_min, sp.omega_max, sp.omega_points)
        cz = spectrum_cz(f, sp.eta, omegas)
        tr = susceptibility_and_transmission(f, sp.eta, omegas)
        with open(path, "w") as fh:
            fh.write("omega,cz,re_chi,im_chi,t2\n")
            for i, w in enumerate(omegas):
                fh.write(
                    f"{_fmt(w)},{_fmt(cz.values[i].real)},{_fmt(tr.chi[i].real)},"
                    f"{_fmt(tr.chi[i].imag)},{_fmt(tr.t_squared[i])}\n"
                )
        return RunRecord("spectrum", method, alpha, "completed", time.perf_counter() - t0, fname)
    except Exception as exc:  # noqa: BLE001
        return RunRecord(
            "spectrum", method, alpha, f"failed: {exc}", time.perf_counter() - t0, fname
        )


def _point_transmission(args) -> RunRecord:
    cfg, method, alpha, out_dir = args
    t0 = time.perf_counter()
    fname = f"transmission_{method}_alpha{_alpha_tag(alpha)}.csv"
    path = os.path.join(out_dir, fname)
    try:
        tc = cfg.transmission
        omegas = np.linspace(tc.omega_min, tc.omega_max, tc.omega_points)
        epsilons = np.linspace(tc.epsilon_min, tc.epsilon_max, tc.epsilon_points)
        dt_2pi = cfg.dt_for(method)
        with open(path, "w") as fh:
            fh.write("epsilon,omega,t2\n")
            for eps in epsilons:
                dt = dt_2pi * TWO_PI
                n = int(round(tc.t_window / dt_2pi))
                spec = BathSpec(alpha=alpha, omega_c=1.0, temperature=cfg.bath.temperature)
                table = tabulate(spec, dt, n)
                model = ModelSpec(delta=cfg.model.delta, epsilon=float(eps))
                traj = get_solver(method)(model, table, dt, n)
                if traj.status != "completed":
                    raise RuntimeError(
                        f"epsilon={eps:g}: diverged at t = {traj.diverged_at / TWO_PI:.6g}"
                    )
                n_kernel = min(int(round(cfg.grid.t_max / dt_2pi)), len(traj.kernels.kernels) - 1)
                ktrunc = KernelTrajectory(
                    dt=traj.kernels.dt,
                    kernels=traj.kernels.kernels[: n_kernel + 1],
                    method=method,
                    form=traj.kernels.form,
                )
                rho_s = steady_state(model, ktrunc, tail_tol=1e-3)
                f = regression_correlation(traj, model.coupling_operator, rho_s)
                tr = susceptibility_and_transmission(f, tc.eta, omegas, tc.n_coupling)
                for i, w in enumerate(omegas):
                    fh.write(f"{_fmt(float(eps))},{_fmt(w)},{_fmt(tr.t_squared[i])}\n")
        return RunRecord(
            "transmission", method, alpha, "completed", time.perf_counter() - t0, fname
        )
    except Exception as exc:  # noqa: BLE001
        return RunRecord(
            "transmission", method, alpha, f"failed: {exc}", time.perf_counter() - t0, fname
        )


def _run_points(point_fn, jobs, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [point_fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point_fn, jobs))


def _finish(cfg, records, out_dir) -> RunManifest:
    manifest = RunManifest(config_echo=_config_echo(cfg), version=__version__, records=records)
    write_manifest(manifest, os.path.join(out_dir, "manifest.txt"))
    return manifest


def _workers(cfg: SimulationConfig) -> int:
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def run_dynamics(cfg: SimulationConfig) -> RunManifest:
    out_dir = cfg.outputs.resolved_directory()
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg, m, a, out_dir) for m in cfg.methods for a in cfg.bath.alpha]
    records = _run_points(_point_dynamics, jobs, _workers(cfg))
    return _finish(cfg, records, out_dir)


def run_steady_sweep(cfg: SimulationConfig) -> RunManifest:
    out_dir = cfg.outputs.resolved_directory()
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg, m, out_dir) for m in cfg.methods]
    records = _run_points(_point_steady, jobs, _workers(cfg))
    return _finish(cfg, records, out_dir)


def run_spectrum(cfg: SimulationConfig) -> RunManifest:
    out_dir = cfg.outputs.resolved_directory()
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg, m, a, out_dir) for m in cfg.methods for a in cfg.bath.alpha]
    records = _run_points(_point_spectrum, jobs, _workers(cfg))
    return _finish(cfg, records, out_dir)


def run_transmission_map(cfg: SimulationConfig) -> RunManifest:
    out_dir = cfg.outputs.resolved_directory()
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg, m, a, out_dir) for m in cfg.methods for a in cfg.bath.alpha]
    records = _run_points(_point_transmission, jobs, _workers(cfg))
    return _finish(cfg, records, out_dir)
