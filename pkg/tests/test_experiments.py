import json
import math
from dataclasses import replace

import numpy as np
import pytest

from stochmaxwell.diagnostics import energy
from stochmaxwell.experiments import (
    ConvergenceTable,
    ExperimentPlan,
    aligned_final_time,
    check_coupling,
    coarsen_path,
    compare_fdm,
    deterministic_convergence,
    grid_distance,
    initial_condition,
    run_plan,
    strong_convergence,
)
from stochmaxwell.grid import GridSpec
from stochmaxwell.noise import NoiseSpec, sample_increments


def test_initial_condition_at_origin(grid16):
    u = initial_condition(grid16)
    np.testing.assert_allclose(u.data[:, 0, 0, 0], [1, -2, 1, math.sqrt(3), 0, -math.sqrt(3)])
    with pytest.raises(ValueError):
        initial_condition(GridSpec((2, 1, 1), (4, 4, 4)))


def test_initial_condition_divergence_free(grid32, curl32):
    u = initial_condition(grid32)
    for F in (u.E, u.H):
        div = sum(curl32.d(F[a], a) for a in range(3))
        assert np.max(np.abs(div)) <= 1e-6


@pytest.mark.parametrize("level", [4, 5])
def test_initial_energy(level):
    assert energy(initial_condition(GridSpec.cube(level))) == pytest.approx(6.0, abs=1e-12)


def test_grid_distance_self_is_zero(ic16):
    assert grid_distance(ic16, ic16) == 0.0


def test_aligned_final_time():
    assert aligned_final_time(0.1, [2.0**-k for k in range(6, 11)]) == 6 / 64
    assert aligned_final_time(1.0, [2.0**-6]) == 1.0
    assert aligned_final_time(0.001, [2.0**-6]) == 2.0**-6


def test_convergence_table_orders():
    t = ConvergenceTable(np.array([0.4, 0.2, 0.1]), np.array([16.0, 4.0, 1.0]), np.zeros(3), 1.0, 0.05)
    np.testing.assert_allclose(t.orders, [2.0, 2.0])
    assert t.slope == pytest.approx(2.0)
    assert t.rows()[0][2] is None


def test_coarse_equal_to_reference_gives_zero_error():
    plan = ExperimentPlan(kind="det-converge", lam=0.0, T=2.0**-6, dt_list=(2.0**-7,), dt_ref=2.0**-7)
    table = deterministic_convergence(plan)
    assert table.errors[0] <= 10 * plan.fp_tol


def test_strong_coarse_equal_to_reference():
    plan = ExperimentPlan(kind="strong-converge", lam=1.0, T=2.0**-6, dt_list=(2.0**-7,), dt_ref=2.0**-7,
                          trajectories=2, modes=4)
    table = strong_convergence(plan)
    assert table.errors[0] <= 10 * plan.fp_tol


def test_coupling_checks(grid16):
    ns = NoiseSpec(modes=4)
    fine = [sample_increments(ns, 0, n, 2.0**-8, grid16) for n in range(8)]
    coarse = coarsen_path(fine, 4)
    check_coupling(fine, coarse)
    assert [c.start for c in coarse] == [0, 4]
    with pytest.raises(ValueError):
        coarsen_path(fine, 3)
    with pytest.raises(ValueError):
        check_coupling(fine, coarse[:1])
    other = coarsen_path([sample_increments(ns, 1, n, 2.0**-8, grid16) for n in range(8)], 4)
    with pytest.raises(ValueError):
        check_coupling(fine, other)


def test_bad_reference_step():
    plan = ExperimentPlan(kind="det-converge", dt_list=(0.01,), dt_ref=0.003, T=0.01)
    with pytest.raises(ValueError):
        deterministic_convergence(plan)


def test_compare_fdm_small():
    plan = ExperimentPlan(kind="compare-fdm", lam=math.sqrt(2), dt=1 / 64, T=4 / 64, trajectories=2)
    res = compare_fdm(plan)
    assert res.energy0 == pytest.approx(6.0)
    assert np.max(res.wavelet_abs) < 1e-10
    assert np.all(np.diff(res.fdm) > 0)
    np.testing.assert_allclose(res.fdm_normalized, res.fdm * 1e7)


def _small(kind, **kw):
    base = dict(kind=kind, level=3, gamma=6, T=0.02, dt=0.005, trajectories=3, lam_sweep=(0.0, 1.0),
                modes_sweep=(1, 4), dt_list=(2.0**-6, 2.0**-7), dt_ref=2.0**-8, bins=4)
    base.update(kw)
    return ExperimentPlan(**base)


@pytest.mark.parametrize(
    "kind, expected",
    [
        ("energy", {"energy_lam0.csv", "energy_lam1.csv", "energy_residual.svg", "energy.svg"}),
        ("ensemble", {"ensemble.csv", "max_energy_density.csv", "ensemble.svg", "trajectory_0002.csv"}),
        ("compare-fdm", {"normalized_energy.csv", "normalized_energy_fdm.svg"}),
        ("det-converge", {"convergence.csv", "convergence.svg"}),
        ("strong-converge", {"strong_M1.csv", "strong_M4.csv", "strong.svg"}),
    ],
)
def test_run_plan_outputs_are_reproducible(tmp_path, kind, expected):
    plan = _small(kind, dt=1 / 64, T=2 / 64) if kind == "compare-fdm" else _small(kind)
    a = run_plan(plan, tmp_path / "a")
    b = run_plan(plan, tmp_path / "b")
    assert expected <= set(a["files"])
    assert a == b
    for fn in a["files"]:
        assert (tmp_path / "a" / fn).read_bytes() == (tmp_path / "b" / fn).read_bytes(), fn


def test_threads_do_not_change_results(tmp_path):
    plan = _small("ensemble")
    run_plan(plan, tmp_path / "a")
    run_plan(replace(plan, threads=2), tmp_path / "b")
    assert (tmp_path / "a" / "ensemble.csv").read_bytes() == (tmp_path / "b" / "ensemble.csv").read_bytes()


def test_manifest(tmp_path):
    from stochmaxwell.experiments import write_manifest

    plan = _small("energy")
    path = write_manifest(tmp_path, plan, {"status": "ok"})
    doc = json.loads(path.read_text())
    assert doc["plan"]["seed"] == plan.seed and doc["status"] == "ok"
    assert doc["grid"]["shape"] == [8, 8, 8]
    assert path.read_text() == write_manifest(tmp_path, plan, {"status": "ok"}).read_text()
