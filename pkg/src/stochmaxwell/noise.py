"""Truncated Q-Wiener increments along x and the ``Psi`` diagnostic.

Random numbers come from a keyed counter-based generator so that the normal
draw for ``(base_seed, trajectory, step, mode)`` is a pure function of those
four integers. The stream contract, for ports:

* bit generator: Philox4x64-10 as implemented by ``numpy.random.Philox``,
  ``key = (base_seed, trajectory)``, ``counter = (0, 0, step, 0)``;
* mode ``m`` (1-based) takes the ``m``-th 64-bit word of ``random_raw``;
* uniform ``u = ((word >> 11) + 0.5) * 2**-53``;
* normal ``g = Phi^{-1}(u)`` (inverse CDF, ``scipy.special.ndtri``).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .grid import GridSpec

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseSpec:
    """Noise size ``lam`` and truncation ``modes``; eigenpairs ``1/m**2``, ``sqrt(2) sin(m pi x)``."""

    lam: float = 0.5
    modes: int = 200
    base_seed: int = 0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"noise size lam must be >= 0, got {self.lam}")
        if int(self.modes) != self.modes or self.modes <= 0:
            raise ValueError(f"number of modes must be a positive integer, got {self.modes}")

    @property
    def eigenvalues(self) -> np.ndarray:
        m = np.arange(1, self.modes + 1, dtype=float)
        return 1.0 / m**2


@dataclass(frozen=True)
class WienerIncrements:
    """Cell increments ``dW_i`` covering fine steps ``start .. start+count-1``."""

    start: int
    count: int
    dt: float
    values: np.ndarray

    @property
    def stop(self) -> int:
        return self.start + self.count

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        h.update(f"{self.start}:{self.count}:{self.dt!r}".encode())
        return h.hexdigest()[:16]


def standard_normals(base_seed: int, traj: int, step: int, count: int) -> np.ndarray:
    """The first ``count`` N(0,1) draws of the stream keyed ``(base_seed, traj, step)``."""
    if count <= 0:
        raise ValueError("count must be positive")
    if step < 0 or traj < 0:
        raise ValueError("trajectory and step indices must be non-negative")
    bitgen = np.random.Philox(
        key=np.array([base_seed & _MASK64, traj & _MASK64], dtype=np.uint64),
        counter=np.array([0, 0, step & _MASK64, 0], dtype=np.uint64),
    )
    words = bitgen.random_raw(count)
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


@lru_cache(maxsize=32)
def _cell_weights(n1: int, dx: float, modes: int) -> np.ndarray:
    # row i, column m-1: (1/dx) sqrt(2 eta_m)/(m pi) [cos(m pi i dx) - cos(m pi (i+1) dx)]
    m = np.arange(1, modes + 1, dtype=float)
    i = np.arange(n1, dtype=float)[:, None]
    amp = np.sqrt(2.0 / m**2) / (m * np.pi)
    w = amp * (np.cos(m * np.pi * i * dx) - np.cos(m * np.pi * (i + 1) * dx)) / dx
    w.setflags(write=False)
    return w


def cell_weights(spec: NoiseSpec, grid: GridSpec) -> np.ndarray:
    """Matrix mapping the per-mode normals (scaled by ``sqrt(dt)``) to cell increments."""
    if grid.extents[0] != 1:
        raise ValueError("noise basis is defined on x in [0, 1]; grid x-extent must be 1")
    return _cell_weights(grid.shape[0], grid.spacing[0], int(spec.modes))


def increments_from_normals(g: np.ndarray, dt: float, spec: NoiseSpec, grid: GridSpec) -> np.ndarray:
    """Cell-averaged increments for given mode normals ``g`` (length ``modes``)."""
    g = np.asarray(g, dtype=float)
    if g.shape != (spec.modes,):
        raise ValueError(f"expected {spec.modes} normals, got shape {g.shape}")
    return cell_weights(spec, grid) @ (math.sqrt(dt) * g)


def sample_increments(spec: NoiseSpec, traj: int, n: int, dt: float, grid: GridSpec) -> WienerIncrements:
    """Increment ``dW_i^n`` for every cell along x on step ``n`` of trajectory ``traj``."""
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    g = standard_normals(spec.base_seed, traj, n, spec.modes)
    return WienerIncrements(start=n, count=1, dt=dt, values=increments_from_normals(g, dt, spec, grid))


def aggregate_increments(fine: Sequence[WienerIncrements]) -> WienerIncrements:
    """Sum of contiguous increments: the coarse-step increment of the same path."""
    if not fine:
        raise ValueError("nothing to aggregate")
    first = fine[0]
    total = np.array(first.values, dtype=float, copy=True)
    pos, dt = first.stop, first.dt
    for inc in fine[1:]:
        if inc.start != pos:
            raise ValueError(f"gap in increments: expected step {pos}, got {inc.start}")
        if inc.values.shape != total.shape:
            raise ValueError("increments on different grids")
        total += inc.values
        pos = inc.stop
        dt += inc.dt
    return WienerIncrements(start=first.start, count=pos - first.start, dt=dt, values=total)


def variance_per_cell(spec: NoiseSpec, grid: GridSpec, dt: float) -> np.ndarray:
    """Exact variance of ``dW_i`` under the truncated expansion."""
    w = cell_weights(spec, grid)
    return dt * np.sum(w * w, axis=1)


def trace_q(modes: int) -> float:
    """``sum_{m<=modes} 1/m**2``."""
    if modes < 0:
        raise ValueError("modes must be non-negative")
    return math.fsum(1.0 / (m * m) for m in range(1, modes + 1))


def psi(x, modes: int = 200):
    """``Psi(x) = sum_m 2 eta_m sin(m pi x)**2`` on ``[0, 1]`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > 1):
        raise ValueError("psi is defined on [0, 1]")
    m = np.arange(1, modes + 1, dtype=float)
    vals = np.sum(2.0 / m**2 * np.sin(np.multiply.outer(xa, m) * np.pi) ** 2, axis=-1)
    return float(vals) if np.ndim(x) == 0 else vals


def write_path_csv(path, increments: Sequence[WienerIncrements]) -> None:
    """Dump increments as ``step,i,value`` rows."""
    with open(path, "w") as fh:
        fh.write("step,i,value\n")
        for inc in increments:
            for i, v in enumerate(inc.values):
                fh.write(f"{inc.start},{i},{float(v)!r}\n")
