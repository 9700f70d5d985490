"""Scripted numerical studies: energy traces, ensembles, FDM comparison, order tables."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .diagnostics import (
    DiagnosticsRecord,
    EnsembleSummary,
    energy,
    ensemble_stats,
    write_ensemble_csv,
    write_histogram_csv,
    write_trajectory_csv,
)
from .grid import FieldState, GridSpec
from .integrator import StepperConfig, build_operator, evolve, step_count
from .noise import NoiseSpec, WienerIncrements, aggregate_increments, sample_increments

log = logging.getLogger(__name__)

KINDS = ("energy", "long-time", "ensemble", "compare-fdm", "det-converge", "strong-converge")
NORMALIZED_ENERGY_SCALE = 1e7


@dataclass(frozen=True)
class ExperimentPlan:
    kind: str = "energy"
    level: int = 4
    gamma: int = 10
    lam: float = 0.5
    lam_sweep: tuple[float, ...] = (0.0, 0.5, 1.0, 5.0)
    modes: int = 200
    modes_sweep: tuple[int, ...] = (1, 4, 8)
    dt: float = 0.005
    dt_list: tuple[float, ...] = tuple(2.0**-k for k in range(6, 11))
    dt_ref: float = 2.0**-11
    T: float = 20.0
    trajectories: int = 20
    seed: int = 20140101
    fp_tol: float = 1e-13
    fp_max_iters: int = 200
    fdm_order: int = 2
    bins: int = 30
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")

    @property
    def grid(self) -> GridSpec:
        return GridSpec.cube(self.level)

    def stepper(self, dt: Optional[float] = None, scheme: str = "wavelet-midpoint") -> StepperConfig:
        return StepperConfig(
            dt=self.dt if dt is None else dt,
            scheme=scheme,
            fp_tol=self.fp_tol,
            fp_max_iters=self.fp_max_iters,
            gamma=self.gamma,
            fdm_order=self.fdm_order,
        )

    def noise(self, lam: Optional[float] = None, modes: Optional[int] = None) -> NoiseSpec:
        return NoiseSpec(
            lam=self.lam if lam is None else lam,
            modes=self.modes if modes is None else modes,
            base_seed=self.seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lam_sweep"] = list(self.lam_sweep)
        d["modes_sweep"] = list(self.modes_sweep)
        d["dt_list"] = list(self.dt_list)
        return d


def initial_condition(grid: GridSpec) -> FieldState:
    """Plane wave ``E1 = cos(2 pi (x+y+z))``, ``E = (1,-2,1) E1``, ``H = sqrt(3) (1,0,-1) E1``."""
    if not grid.is_unit_cube:
        raise ValueError("the plane-wave initial condition is defined on the unit cube")
    X, Y, Z = grid.mesh()
    c = np.cos(2 * np.pi * (X + Y + Z))
    s3 = math.sqrt(3.0)
    return FieldState.from_components(grid, [c, -2 * c, c], [s3 * c, np.zeros_like(c), -s3 * c])


def _pool_map(fn, args: Sequence, threads: int) -> list:
    if threads <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, *zip(*args)))


# --- energy / ensemble ----------------------------------------------------------


def _single_run(plan: ExperimentPlan, lam: float, traj: int, T: float) -> list[DiagnosticsRecord]:
    u0 = initial_condition(plan.grid)
    return evolve(u0, plan.stepper(), plan.noise(lam=lam), T, traj=traj).records


def energy_study(plan: ExperimentPlan, lams: Optional[Sequence[float]] = None) -> dict[float, list[DiagnosticsRecord]]:
    """One trajectory per noise size; energy and residual series."""
    lams = tuple(plan.lam_sweep if lams is None else lams)
    results = _pool_map(_single_run, [(plan, lam, 0, plan.T) for lam in lams], plan.threads)
    return dict(zip(lams, results))


def ensemble_study(plan: ExperimentPlan) -> tuple[list[list[DiagnosticsRecord]], EnsembleSummary]:
    runs = _pool_map(_single_run, [(plan, plan.lam, k, plan.T) for k in range(plan.trajectories)], plan.threads)
    return runs, ensemble_stats(runs, bins=plan.bins)


# --- FDM comparison ----------------------------------------------------------------


@dataclass
class ComparisonResult:
    times: np.ndarray
    wavelet: np.ndarray  # mean (energy - energy0), per time
    fdm: np.ndarray
    wavelet_abs: np.ndarray  # mean |energy - energy0|
    fdm_abs: np.ndarray
    energy0: float

    @property
    def wavelet_normalized(self) -> np.ndarray:
        return self.wavelet * NORMALIZED_ENERGY_SCALE

    @property
    def fdm_normalized(self) -> np.ndarray:
        return self.fdm * NORMALIZED_ENERGY_SCALE


def _compare_trajectory(plan: ExperimentPlan, traj: int) -> tuple[list, list]:
    grid = plan.grid
    u0 = initial_condition(grid)
    ns = plan.noise()
    K = step_count(plan.T, plan.dt)
    path = [sample_increments(ns, traj, n, plan.dt, grid) for n in range(K)] if ns.lam else None
    wav = evolve(u0, plan.stepper(), ns, plan.T, increments=path).records
    fdm = evolve(u0, plan.stepper(scheme="fdm-baseline"), ns, plan.T, increments=path).records
    return wav, fdm


def compare_fdm(plan: ExperimentPlan) -> ComparisonResult:
    """Both schemes on identical noise paths; mean energy residual series."""
    pairs = _pool_map(_compare_trajectory, [(plan, k) for k in range(plan.trajectories)], plan.threads)
    times = np.array([r.t for r in pairs[0][0]])
    W = np.array([[r.err for r in w] for w, _ in pairs])
    F = np.array([[r.err for r in f] for _, f in pairs])
    return ComparisonResult(
        times=times,
        wavelet=W.mean(axis=0),
        fdm=F.mean(axis=0),
        wavelet_abs=np.abs(W).mean(axis=0),
        fdm_abs=np.abs(F).mean(axis=0),
        energy0=pairs[0][0][0].energy,
    )


# --- convergence tables --------------------------------------------------------


@dataclass
class ConvergenceTable:
    dts: np.ndarray
    errors: np.ndarray
    stderr: np.ndarray
    T: float
    dt_ref: float
    modes: Optional[int] = None
    samples: int = 1

    @property
    def orders(self) -> np.ndarray:
        return np.log2(self.errors[:-1] / self.errors[1:]) / np.log2(self.dts[:-1] / self.dts[1:])

    @property
    def slope(self) -> float:
        return float(np.polyfit(np.log(self.dts), np.log(self.errors), 1)[0])

    def rows(self) -> list[tuple[float, float, Optional[float]]]:
        orders = [None, *self.orders.tolist()]
        return [(float(d), float(e), o) for d, e, o in zip(self.dts, self.errors, orders)]


def aligned_final_time(T: float, dts: Sequence[float]) -> float:
    """Nearest positive multiple of the coarsest step, so every step size lands on it."""
    coarse = max(dts)
    return max(1, int(round(T / coarse))) * coarse


def _check_ratios(dts: Sequence[float], dt_ref: float) -> list[int]:
    ratios = []
    for dt in dts:
        r = dt / dt_ref
        if r < 1 or abs(r - round(r)) > 1e-9:
            raise ValueError(f"reference dt {dt_ref} must be the finest and divide dt={dt}")
        ratios.append(int(round(r)))
    return ratios


def grid_distance(a: FieldState, b: FieldState) -> float:
    return math.sqrt(energy(FieldState(a.grid, a.data - b.data)))


def deterministic_convergence(plan: ExperimentPlan) -> ConvergenceTable:
    """Errors against a fine-step reference with the noise switched off."""
    dts = sorted(plan.dt_list, reverse=True)
    _check_ratios(dts, plan.dt_ref)
    T = aligned_final_time(plan.T, dts)
    u0 = initial_condition(plan.grid)
    ops = build_operator(plan.grid, plan.stepper())
    ref = evolve(u0, plan.stepper(plan.dt_ref), None, T, ops=ops, record_energy=False).final
    errs = [
        grid_distance(ref, evolve(u0, plan.stepper(dt), None, T, ops=ops, record_energy=False).final)
        for dt in dts
    ]
    return ConvergenceTable(np.array(dts), np.array(errs), np.zeros(len(dts)), T, plan.dt_ref)


def coarsen_path(fine: Sequence[WienerIncrements], ratio: int) -> list[WienerIncrements]:
    if len(fine) % ratio:
        raise ValueError(f"path of {len(fine)} steps cannot be split into blocks of {ratio}")
    return [aggregate_increments(fine[j : j + ratio]) for j in range(0, len(fine), ratio)]


def check_coupling(fine: Sequence[WienerIncrements], coarse: Sequence[WienerIncrements]) -> None:
    """Coarse path must tile the fine steps and carry the same total increment."""
    pos = fine[0].start
    for inc in coarse:
        if inc.start != pos:
            raise ValueError(f"coupling misaligned at fine step {pos}")
        pos = inc.stop
    if pos != fine[-1].stop:
        raise ValueError("coarse path does not cover the reference path")
    tot_f = np.sum([f.values for f in fine], axis=0)
    tot_c = np.sum([c.values for c in coarse], axis=0)
    scale = 1.0 + float(np.max(np.abs(tot_f)))
    if np.max(np.abs(tot_f - tot_c)) > 1e-12 * scale * len(fine):
        raise ValueError("coarse and fine paths have different Brownian totals")


def _strong_trajectory(plan: ExperimentPlan, modes: int, traj: int, dts: tuple, T: float) -> list[float]:
    grid = plan.grid
    ns = plan.noise(modes=modes)
    u0 = initial_condition(grid)
    ops = build_operator(grid, plan.stepper())
    K = step_count(T, plan.dt_ref)
    fine = [sample_increments(ns, traj, n, plan.dt_ref, grid) for n in range(K)]
    ref = evolve(u0, plan.stepper(plan.dt_ref), ns, T, increments=fine, ops=ops, record_energy=False).final
    out = []
    for dt, r in zip(dts, _check_ratios(dts, plan.dt_ref)):
        coarse = coarsen_path(fine, r)
        check_coupling(fine, coarse)
        u = evolve(u0, plan.stepper(dt), ns, T, increments=coarse, ops=ops, record_energy=False).final
        out.append(grid_distance(ref, u) ** 2)
    return out


def strong_convergence(plan: ExperimentPlan, modes: Optional[int] = None) -> ConvergenceTable:
    """Mean-square error per step size over path-coupled trajectories."""
    if not plan.lam > 0:
        raise ValueError("strong convergence needs lam > 0")
    if plan.trajectories < 2:
        raise ValueError("strong convergence needs at least two trajectories")
    modes = plan.modes if modes is None else modes
    dts = tuple(sorted(plan.dt_list, reverse=True))
    _check_ratios(dts, plan.dt_ref)
    T = aligned_final_time(plan.T, dts)
    sq = np.array(
        _pool_map(_strong_trajectory, [(plan, modes, k, dts, T) for k in range(plan.trajectories)], plan.threads)
    )
    mse = sq.mean(axis=0)
    err = np.sqrt(mse)
    # delta method for the standard error of sqrt(mean)
    se = sq.std(axis=0, ddof=1) / math.sqrt(sq.shape[0]) / (2 * np.where(err > 0, err, 1.0))
    return ConvergenceTable(np.array(dts), err, se, T, plan.dt_ref, modes, sq.shape[0])


# --- output ----------------------------------------------------------------------


def write_table_csv(path, table: ConvergenceTable) -> None:
    with open(path, "w") as fh:
        fh.write("dt,error,order,stderr\n")
        for (dt, e, o), se in zip(table.rows(), table.stderr):
            fh.write(f"{dt!r},{e!r},{'' if o is None else repr(o)},{float(se)!r}\n")


def write_manifest(out_dir, plan: ExperimentPlan, extra: Optional[dict] = None) -> Path:
    manifest = {
        "code_version": __version__,
        "plan": plan.to_dict(),
        "seeds": {"base_seed": plan.seed, "trajectory_keys": list(range(plan.trajectories))},
        "grid": {"shape": list(plan.grid.shape), "spacing": list(plan.grid.spacing)},
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_plan(plan: ExperimentPlan, out_dir) -> dict:
    """Run ``plan`` and write CSV series and SVG charts under ``out_dir``.

    Returns manifest extras (effective final times, file names, summary numbers).
    """
    from .charts import emit_chart

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    extra: dict = {"files": files}

    def name(fn: str) -> Path:
        files.append(fn)
        return out / fn

    if plan.kind in ("energy", "long-time"):
        runs = energy_study(plan)
        series = []
        for lam, recs in runs.items():
            write_trajectory_csv(name(f"energy_lam{lam:g}.csv"), recs)
            series.append(([r.t for r in recs], [r.err for r in recs]))
        labels = [f"lambda={lam:g}" for lam in runs]
        emit_chart(series, labels, name("energy_residual.svg"), title="Energy residual", ylabel="Err")
        emit_chart([([r.t for r in v], [r.energy for r in v]) for v in runs.values()], labels,
                   name("energy.svg"), title="Discrete energy", ylabel="energy")
        extra["max_abs_residual"] = {f"{lam:g}": max(abs(r.err) for r in v) for lam, v in runs.items()}
    elif plan.kind == "ensemble":
        runs, summary = ensemble_study(plan)
        for k, recs in enumerate(runs):
            write_trajectory_csv(name(f"trajectory_{k:04d}.csv"), recs)
        write_ensemble_csv(name("ensemble.csv"), summary)
        write_histogram_csv(name("max_energy_density.csv"), summary)
        emit_chart([(summary.times, summary.mean), (summary.times, summary.min), (summary.times, summary.max)],
                   ["mean", "min", "max"], name("ensemble.svg"), title="Energy over trajectories", ylabel="energy")
        emit_chart([(summary.bin_centers, summary.density)], ["density"], name("max_energy_density.svg"),
                   title="Density of max energy", mode="histogram")
    elif plan.kind == "compare-fdm":
        res = compare_fdm(plan)
        with open(name("normalized_energy.csv"), "w") as fh:
            fh.write("t,wavelet,fdm\n")
            for row in zip(res.times, res.wavelet_normalized, res.fdm_normalized):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        emit_chart([(res.times, res.wavelet_normalized)], ["wavelet midpoint"], name("normalized_energy_wavelet.svg"),
                   title="Mean normalized energy (wavelet)", ylabel="(E-E0)*1e7")
        emit_chart([(res.times, res.fdm_normalized)], ["finite difference"], name("normalized_energy_fdm.svg"),
                   title="Mean normalized energy (FDM)", ylabel="(E-E0)*1e7")
        extra["final_mean_abs_residual"] = {"wavelet": float(res.wavelet_abs[-1]), "fdm": float(res.fdm_abs[-1])}
    elif plan.kind == "det-converge":
        table = deterministic_convergence(replace(plan, lam=0.0))
        write_table_csv(name("convergence.csv"), table)
        emit_chart([(table.dts, table.errors)], ["L2 error"], name("convergence.svg"),
                   title="Deterministic convergence", xlabel="dt", ylabel="error", log=True)
        extra["T_effective"] = table.T
    else:
        tables = {}
        for m in plan.modes_sweep:
            table = strong_convergence(plan, modes=m)
            write_table_csv(name(f"strong_M{m}.csv"), table)
            tables[m] = table
        emit_chart([(t.dts, t.errors) for t in tables.values()], [f"M={m}" for m in tables], name("strong.svg"),
                   title="Strong convergence", xlabel="dt", ylabel="error", log=True)
        extra["T_effective"] = next(iter(tables.values())).T
        extra["slopes"] = {str(m): t.slope for m, t in tables.items()}
    return extra
