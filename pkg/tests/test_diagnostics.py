import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stochmaxwell.diagnostics import (
    DiagnosticsRecord,
    energy,
    ensemble_stats,
    local_pairing,
    symplectic_pairing,
    write_ensemble_csv,
    write_histogram_csv,
    write_trajectory_csv,
)
from stochmaxwell.grid import FieldState, GridSpec

G = GridSpec.cube(2)
fields = arrays(np.float64, (6, 4, 4, 4), elements=st.floats(-10, 10, allow_nan=False))


def unit(component, value=1.0):
    u = FieldState.zeros(G)
    u.data[component] = value
    return u


def test_pairing_examples():
    # H_v . E_w - E_v . H_w with v = (E=0, H=e1), w = (E=e1, H=0)
    assert symplectic_pairing(unit(3), unit(0)) == pytest.approx(1.0, abs=1e-15)
    assert symplectic_pairing(unit(0), unit(3)) == pytest.approx(-1.0, abs=1e-15)
    assert symplectic_pairing(unit(0), unit(1)) == 0.0
    assert symplectic_pairing(unit(3), unit(4)) == 0.0


def test_local_pairing_sums_to_pairing():
    rng = np.random.default_rng(0)
    v = FieldState(G, rng.normal(size=(6, 4, 4, 4)))
    w = FieldState(G, rng.normal(size=(6, 4, 4, 4)))
    assert local_pairing(v, w).sum() * G.cell_volume == pytest.approx(symplectic_pairing(v, w), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(fields, fields)
def test_pairing_antisymmetric(a, b):
    v, w = FieldState(G, a), FieldState(G, b)
    assert symplectic_pairing(v, w) == pytest.approx(-symplectic_pairing(w, v), abs=1e-9)
    assert symplectic_pairing(v, v) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(fields)
def test_energy_nonnegative(a):
    u = FieldState(G, a)
    e = energy(u)
    assert e >= 0
    assert e == pytest.approx(float(np.sum(a * a)) * G.cell_volume, rel=1e-12, abs=1e-300)


def _series(energies, dt=0.1):
    return [DiagnosticsRecord(n, n * dt, e, e - energies[0]) for n, e in enumerate(energies)]


def test_ensemble_stats_values():
    runs = [_series([1.0, 2.0, 3.0]), _series([1.0, 4.0, 0.5])]
    s = ensemble_stats(runs, bins=2)
    np.testing.assert_allclose(s.mean, [1.0, 3.0, 1.75])
    np.testing.assert_allclose(s.min, [1.0, 2.0, 0.5])
    np.testing.assert_allclose(s.max, [1.0, 4.0, 3.0])
    np.testing.assert_allclose(s.max_energy, [3.0, 4.0])
    np.testing.assert_allclose(s.bin_centers, [3.25, 3.75])
    assert np.sum(s.density * np.diff(s.bin_edges)) == pytest.approx(1.0)


def test_ensemble_rejects_misaligned():
    with pytest.raises(ValueError):
        ensemble_stats([_series([1, 2, 3]), _series([1, 2])])
    with pytest.raises(ValueError):
        ensemble_stats([_series([1, 2], 0.1), _series([1, 2], 0.2)])
    with pytest.raises(ValueError):
        ensemble_stats([])


def test_csv_writers(tmp_path):
    runs = [_series([1.0, 2.0]), _series([1.0, 3.0])]
    write_trajectory_csv(tmp_path / "t.csv", runs[0])
    s = ensemble_stats(runs, bins=4)
    write_ensemble_csv(tmp_path / "e.csv", s)
    write_histogram_csv(tmp_path / "h.csv", s)
    assert (tmp_path / "t.csv").read_text().splitlines() == ["n,t,energy,err,iters", "0,0.0,1.0,0.0,0", "1,0.1,2.0,1.0,0"]
    assert (tmp_path / "e.csv").read_text().splitlines()[2] == "0.1,2.5,2.0,3.0"
    assert len((tmp_path / "h.csv").read_text().splitlines()) == 5


def test_ensemble_histogram_with_roundoff_spread():
    runs = [_series([6.0, 6.0 + k * 1e-15]) for k in range(5)]
    s = ensemble_stats(runs, bins=10)
    assert s.counts.sum() == 5
    assert np.all(np.isfinite(s.density))
    assert s.bin_edges[0] <= 6.0 <= s.bin_edges[-1]
    assert np.sum(s.density * np.diff(s.bin_edges)) == pytest.approx(1.0)
