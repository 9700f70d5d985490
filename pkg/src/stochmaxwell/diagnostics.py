"""Conserved quantities, symplectic pairings and ensemble summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import FieldState, grid_inner_product, weighted_sum


@dataclass(frozen=True)
class DiagnosticsRecord:
    n: int
    t: float
    energy: float
    err: float
    iters: int = 0
    pairing: Optional[float] = None


def energy(u: FieldState) -> float:
    """Discrete energy ``||E||^2 + ||H||^2``."""
    return grid_inner_product(u, u)


def symplectic_pairing(v: FieldState, w: FieldState) -> float:
    """Grid sum of the 2-form ``<M v, w>`` with ``M (H, E) = (-E, H)``.

    Per cell this is ``H_v . E_w - E_v . H_w``.
    """
    if v.grid != w.grid or v.data.shape != w.data.shape:
        raise ValueError("pairing of tangent states on different grids")
    cell = v.H * w.E - v.E * w.H
    return weighted_sum(cell, v.grid.cell_volume)


def local_pairing(v: FieldState, w: FieldState) -> np.ndarray:
    """Cellwise 2-form density (before the grid sum)."""
    return np.sum(v.H * w.E - v.E * w.H, axis=0)


@dataclass(frozen=True)
class EnsembleSummary:
    times: np.ndarray
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    max_energy: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


def ensemble_stats(records: Sequence[Sequence[DiagnosticsRecord]], bins: int = 30) -> EnsembleSummary:
    """Per-time mean/min/max energy and a histogram of per-trajectory ``max_n`` energy.

    Trajectories are merged in the order given (trajectory-id order).
    """
    if not records:
        raise ValueError("need at least one trajectory")
    times = np.array([r.t for r in records[0]])
    series = []
    for k, traj in enumerate(records):
        t_k = np.array([r.t for r in traj])
        if t_k.shape != times.shape or not np.array_equal(t_k, times):
            raise ValueError(f"trajectory {k} is not aligned with trajectory 0")
        series.append([r.energy for r in traj])
    Y = np.array(series)
    peak = Y.max(axis=1)
    lo, hi = float(peak.min()), float(peak.max())
    # conserved energies agree to roundoff; widen the range so the bins stay finite
    min_span = 1e-12 * max(1.0, abs(lo), abs(hi))
    if hi - lo < min_span:
        mid = 0.5 * (lo + hi)
        lo, hi = mid - 0.5 * min_span, mid + 0.5 * min_span
    counts, edges = np.histogram(peak, bins=bins, range=(lo, hi))
    widths = np.diff(edges)
    density = counts / (counts.sum() * widths)
    return EnsembleSummary(
        times=times,
        mean=Y.mean(axis=0),
        min=Y.min(axis=0),
        max=Y.max(axis=0),
        max_energy=peak,
        bin_edges=edges,
        counts=counts,
        density=density,
    )


def write_trajectory_csv(path, records: Sequence[DiagnosticsRecord]) -> None:
    with open(path, "w") as fh:
        fh.write("n,t,energy,err,iters\n")
        for r in records:
            fh.write(f"{r.n},{r.t!r},{r.energy!r},{r.err!r},{r.iters}\n")


def write_ensemble_csv(path, summary: EnsembleSummary) -> None:
    with open(path, "w") as fh:
        fh.write("t,mean,min,max\n")
        for row in zip(summary.times, summary.mean, summary.min, summary.max):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_histogram_csv(path, summary: EnsembleSummary) -> None:
    with open(path, "w") as fh:
        fh.write("bin_center,density\n")
        for c, d in zip(summary.bin_centers, summary.density):
            fh.write(f"{float(c)!r},{float(d)!r}\n")
