"""
Experiment orchestration behind the CLI.

Each method turns a validated :class:`ExperimentConfig` into a list of
:class:`~analogctl.runner.reports.Table` objects plus a summary mapping.
Independent sweep points run on a thread pool; ``Executor.map`` keeps the
results in sweep order, so the written tables do not depend on the thread
count.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..baths import BathModel
from ..bloch import BlochModel
from ..control_path import (ControlPath, energy_e, energy_es, geodesic_path,
                            hamiltonian_extract, modulation_spectrum, static_path)
from ..dd_sequences import bang_bang, build_sequence, pulse_energy
from ..el_optimizer import OptimizationConfig, select_solution, sweep_lambda
from ..error_functional import gate_error_time, kernel
from ..leakage import LeakageScenario, default_leakage_bath, surplus_error
from .config import ConfigError, ExperimentConfig, build_bath, make_sequence, parse_gate
from .reports import Table

__all__ = ["RunOutput", "run_experiment", "pearson", "spectra_table"]

log = logging.getLogger(__name__)

AXIS_NAMES = ("x", "y", "z")


@dataclass
class RunOutput:
    tables: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


def _axis_labels(m: int):
    return AXIS_NAMES if m == 3 else tuple(str(i + 1) for i in range(m))


def _map(fn, items, threads: int):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def pearson(a, b):
    """Pearson correlation, or None when either input is constant."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return None
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def _gate_error(path: ControlPath, bath: BathModel) -> float:
    return gate_error_time(kernel(path, bath))


def _unit_es(cfg: ExperimentConfig) -> float:
    """Display unit for E_S: one tenth of a single pi pulse of the configured width."""
    return pulse_energy(cfg["dd"]["pulse_width"]) / 10


# ----------------------------------------------------------------- spectra
def _spectra_grid(cfg: ExperimentConfig, bath: BathModel):
    sp = cfg["spectra"]
    return np.linspace(0.0, sp["omega_max"] or bath.omega_max, sp["n_omega"])


def spectra_table(paths, bath: BathModel, omega) -> tuple:
    """Long-format spectra table and per-path Pearson correlations.

    ``paths`` is a list of ``(label, path)``.  Columns are the label,
    ``omega``, the diagonal bath spectra ``G_i`` and the diagonal
    modulation spectra ``F_i`` of that path.
    """
    m = bath.n_axes
    ax = _axis_labels(m)
    G = np.einsum("wjj->wj", bath.spectral_matrix(omega)).real
    table = Table("spectra", ["path", "omega [rad/t_gate]"]
                  + [f"G_{a} [1/t_gate]" for a in ax] + [f"F_{a} [t_gate]" for a in ax])
    corr = {}
    for label, path in paths:
        F = modulation_spectrum(path, omega).diagonal()
        for w, g, f in zip(omega, G, F):
            table.add(label, w, *g, *f)
        corr[label] = {a: pearson(F[:, i], G[:, i]) for i, a in enumerate(ax)}
    return table, corr


def _pearson_line(label, corr):
    parts = [f"{a}={'n/a' if v is None else format(v, '+.3f')}" for a, v in corr.items()]
    return f"pearson(F, G) [{label}]: " + " ".join(parts)


# ---------------------------------------------------------------- optimize
def _initial_path(cfg: ExperimentConfig) -> ControlPath:
    _, target = parse_gate(cfg["gate"])
    grid = cfg["grid"]
    path = geodesic_path(target, grid["n_t"], grid["t_gate"])
    amp = cfg["optimize"]["init_noise"]
    if amp > 0:
        # smooth seeded perturbation that keeps both endpoints
        rng = np.random.default_rng(cfg.seed)
        s = path.times / path.t_gate
        modes = np.sin(np.pi * np.outer(s, np.arange(1, 4)))
        path = path.with_f(path.f_values + amp * modes @ rng.standard_normal((3, path.n_params)))
    return path


def _opt_config(cfg: ExperimentConfig) -> OptimizationConfig:
    o = cfg["optimize"]
    return OptimizationConfig(alpha=o["alpha"], max_iters=o["max_iters"], tol=o["tol"],
                              regularize=o["regularize"], max_step=o["max_step"])


def _run_sweep(cfg, bath, threads):
    initial = _initial_path(cfg)
    lams = [0.0] + [lam for lam in cfg["optimize"]["lambdas"] if lam != 0]
    results = sweep_lambda(bath, initial, lams, _opt_config(cfg), threads=threads)
    threshold = cfg["optimize"]["error_threshold"]
    chosen = select_solution(results, threshold) if threshold else None
    if chosen is None:
        chosen = min(results, key=lambda r: r.error_final)
    return initial, results, chosen


def optimize_tables(cfg: ExperimentConfig, bath: BathModel, threads: int = 1,
                    spectra: bool = True) -> RunOutput:
    initial, results, chosen = _run_sweep(cfg, bath, threads)
    unit = _unit_es(cfg)
    ref = results[0].error_final
    sweep = Table("sweep", ["index", "lambda [1/t_gate]", "E_S [1/t_gate]",
                            "E_S_rescaled [pi-pulse E_S/10]", "E [1/t_gate]",
                            "E_implied [1/t_gate]", "error_initial [1]", "error [1]",
                            "error_ratio [1]", "status", "iterations", "selected"])
    for i, r in enumerate(results):
        ratio = r.error_final / ref if ref > 0 else 1.0
        sweep.add(i, r.lam, r.energy_es, r.energy_es / unit, r.energy_e, r.implied_energy,
                  r.error_initial, r.error_final, ratio, r.status, r.iterations, r is chosen)

    out = RunOutput([sweep])
    path = chosen.path
    _, omega = hamiltonian_extract(path)
    m = path.basis.n_axes
    ax = _axis_labels(m)
    controls = Table("controls", ["t [t_gate]"] + [f"omega_{a} [rad/t_gate]" for a in ax]
                     + [f"f_{k + 1} [rad]" for k in range(path.n_params)])
    for t, w, f in zip(path.times, omega, path.f_values):
        controls.add(t, *w, *f)
    out.tables.append(controls)

    out.summary = {
        "method": "optimize",
        "error_ref": ref,
        "selected_index": next(i for i, r in enumerate(results) if r is chosen),
        "selected_lambda": chosen.lam,
        "selected_error": chosen.error_final,
        "statuses": [r.status for r in results],
    }
    if spectra:
        table, corr = spectra_table([("initial", initial), ("optimized", path)], bath,
                                    _spectra_grid(cfg, bath))
        out.tables.append(table)
        out.summary["pearson"] = corr
        out.summary["lines"] = [_pearson_line(k, v) for k, v in corr.items()]
    return out


# -------------------------------------------------------------- dd-sequence
def _sequences(cfg: ExperimentConfig):
    specs = [make_sequence(item, cfg.raw) for item in cfg["dd"]["sequences"]]
    dd = cfg["dd"]
    for n in dd["pulse_counts"]:
        specs.append(make_sequence({"kind": "BB", "n": n, "pulse_width": dd["pulse_width"]},
                                   cfg.raw))
    return specs


def dd_tables(cfg: ExperimentConfig, bath: BathModel, threads: int = 1,
              spectra: bool = True) -> RunOutput:
    specs = _sequences(cfg)
    paths = [build_sequence(s) for s in specs]
    grid = cfg["grid"]
    free = static_path(grid["n_t"], grid["t_gate"])
    ref = _gate_error(free, bath)
    errors = _map(lambda p: _gate_error(p, bath), paths, threads)
    unit = _unit_es(cfg)
    sweep = Table("sweep", ["index", "sequence", "n_pulses", "gate", "E_S [1/t_gate]",
                            "E_S_rescaled [pi-pulse E_S/10]", "error [1]", "error_ratio [1]"])
    pulses = Table("pulses", ["index", "sequence", "pulse", "start [t_gate]", "end [t_gate]",
                              "centre [t_gate]", "axis"])
    for i, (spec, path, err) in enumerate(zip(specs, paths, errors)):
        es = energy_es(path)
        sweep.add(i, spec.name, path.meta["n_pulses"], path.meta["gate"], es, es / unit, err,
                  err / ref if ref > 0 else 1.0)
        for k, (a, b, axis) in enumerate(path.meta["schedule"]):
            pulses.add(i, spec.name, k, a, b, (a + b) / 2, axis)
    out = RunOutput([sweep, pulses], {"method": "dd-sequence", "error_ref": ref,
                                      "sequences": [s.name for s in specs]})
    if spectra:
        labelled = [("free", free)] + [(f"{i}:{s.name}", p)
                                       for i, (s, p) in enumerate(zip(specs, paths))]
        table, corr = spectra_table(labelled, bath, _spectra_grid(cfg, bath))
        out.tables.append(table)
        out.summary["pearson"] = corr
    return out


# -------------------------------------------------------------------- bloch
def bloch_tables(cfg: ExperimentConfig, bath: BathModel, threads: int = 1) -> RunOutput:
    if bath.n_axes != 3:
        raise ConfigError("bath.family", "Bloch analysis needs a three-axis bath")
    bl = cfg["bloch"]
    grid = cfg["grid"]
    summary = {"method": "bloch", "path": bl["path"]}
    if bl["path"] == "static":
        path = static_path(grid["n_t"], grid["t_gate"])
    elif bl["path"] == "geodesic":
        path = _initial_path(cfg)
    else:
        _, _, chosen = _run_sweep(cfg, bath, threads)
        path = chosen.path
        summary["selected_lambda"] = chosen.lam
    t_final = bl["t_final"] or path.t_gate
    if t_final > path.t_gate:
        raise ConfigError("bloch.t_final", "must not exceed grid.t_gate")
    model = BlochModel(path, bath, t_max=t_final)
    traj = model.evolve(bl["r_init"], t_final, bl["n_steps"])
    table = Table("bloch", ["t [t_gate]", "r_x [1]", "r_y [1]", "r_z [1]", "norm [1]",
                            "rate_1 [1/t_gate]", "rate_2 [1/t_gate]", "rate_3 [1/t_gate]",
                            "shift_x [rad/t_gate]", "shift_y [rad/t_gate]",
                            "shift_z [rad/t_gate]"])
    for t, r, nrm in zip(traj.times, traj.r, traj.norm):
        _, Lp, _ = model.matrices(t)
        _, _, dw = model.drift(t)
        rates = np.sort(-np.linalg.eigvalsh(Lp))
        table.add(t, *r, nrm, *rates, *dw)
    summary["final_norm"] = float(traj.norm[-1])
    return RunOutput([table], summary)


# ------------------------------------------------------------------ leakage
def leakage_tables(cfg: ExperimentConfig, bath: BathModel, threads: int = 1) -> RunOutput:
    if bath.n_axes != 3:
        raise ConfigError("bath.family", "the qubit bath of a leakage run needs three axes")
    lk = cfg["leakage"]
    grid = cfg["grid"]
    leak = default_leakage_bath(lk["coupling"], lk["omega_min"], lk["omega_max"],
                                grid["t_gate"], lk["n_omega"])
    if lk["pulse_counts"]:
        bases = []
        for n in lk["pulse_counts"]:
            spec = bang_bang(n, cfg["dd"]["pulse_width"], grid["t_gate"], n_t=grid["n_t"],
                             points_per_pulse=cfg["dd"]["points_per_pulse"])
            bases.append((spec.name, n, build_sequence(spec)))
    else:
        bases = [("geodesic", 0, _initial_path(cfg))]
    jobs = [(b, det) for b in bases for det in lk["detunes"]]

    def one(job):
        (_, _, path), det = job
        return surplus_error(LeakageScenario(path, det, leak), bath)

    results = _map(one, jobs, threads)
    unit = _unit_es(cfg)
    table = Table("surplus", ["index", "path", "n_pulses", "E_S [1/t_gate]",
                              "E_S_rescaled [pi-pulse E_S/10]", "detune [rad/t_gate]",
                              "error_with_leakage [1]", "error_without_leakage [1]",
                              "relative_surplus [1]", "leakage_population [1]"])
    energies = {id(p): energy_es(p) for _, _, p in bases}
    for i, (((name, n, path), det), res) in enumerate(zip(jobs, results)):
        es = energies[id(path)]
        table.add(i, name, n, es, es / unit, det, res.with_leakage, res.without_leakage,
                  res.relative_surplus, res.leakage_population)
    return RunOutput([table], {"method": "leakage", "leakage_bath": leak.name})


# ------------------------------------------------------------------ dispatch
def run_experiment(cfg: ExperimentConfig, mode: str = "run", threads: int = 1) -> RunOutput:
    """Execute ``cfg``.

    ``mode`` is ``run`` (everything the method produces), ``sweep`` (only
    the error-vs-E_S table; optimize and dd-sequence methods) or
    ``spectra`` (spectra of the constructed, unoptimized paths).
    """
    bath = build_bath(cfg["bath"], cfg["grid"]["t_gate"])
    method = cfg.method
    if mode == "sweep":
        if method not in ("optimize", "dd-sequence"):
            raise ConfigError("method", "sweep needs method optimize or dd-sequence")
        fn = optimize_tables if method == "optimize" else dd_tables
        out = fn(cfg, bath, threads, spectra=False)
        out.tables = [t for t in out.tables if t.name == "sweep"]
        return out
    if mode == "spectra":
        if method == "dd-sequence":
            specs = _sequences(cfg)
            paths = [(f"{i}:{s.name}", build_sequence(s)) for i, s in enumerate(specs)]
        else:
            paths = [("initial", _initial_path(cfg))]
        table, corr = spectra_table(paths, bath, _spectra_grid(cfg, bath))
        return RunOutput([table], {"method": method, "pearson": corr,
                                   "lines": [_pearson_line(k, v) for k, v in corr.items()]})
    if method == "optimize":
        return optimize_tables(cfg, bath, threads)
    if method == "dd-sequence":
        return dd_tables(cfg, bath, threads)
    if method == "bloch":
        return bloch_tables(cfg, bath, threads)
    return leakage_tables(cfg, bath, threads)
