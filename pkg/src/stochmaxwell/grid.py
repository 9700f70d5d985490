"""Periodic collocation grid, field containers and axis-wise derivatives."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .wavelet_basis import CirculantStencil, connection_coefficients, diff_stencil, fd_stencil

AXES = {"x": 0, "y": 1, "z": 2}
COMPONENTS = ("E1", "E2", "E3", "H1", "H2", "H3")


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[0,L1] x [0,L2] x [0,L3]`` with ``N_i = L_i 2**J_i``.

    Point ``i`` sits at ``x_i = i * dx``; index ``N`` wraps onto index 0.
    """

    extents: tuple[int, int, int] = (1, 1, 1)
    levels: tuple[int, int, int] = (4, 4, 4)

    def __post_init__(self):
        if len(self.extents) != 3 or len(self.levels) != 3:
            raise ValueError("extents and levels must each have three entries")
        if any(int(L) != L or L < 1 for L in self.extents):
            raise ValueError(f"extents must be positive integers, got {self.extents}")
        if any(int(J) != J or J < 0 for J in self.levels):
            raise ValueError(f"levels must be non-negative integers, got {self.levels}")

    @classmethod
    def cube(cls, level: int) -> "GridSpec":
        return cls((1, 1, 1), (level, level, level))

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(L) * 2 ** int(J) for L, J in zip(self.extents, self.levels))

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(2.0 ** -int(J) for J in self.levels)

    @property
    def cell_volume(self) -> float:
        dx, dy, dz = self.spacing
        return dx * dy * dz

    @property
    def is_unit_cube(self) -> bool:
        return tuple(self.extents) == (1, 1, 1)

    def coordinates(self, axis: int) -> np.ndarray:
        return np.arange(self.shape[axis]) * self.spacing[axis]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(*(self.coordinates(a) for a in range(3)), indexing="ij")


@dataclass
class FieldState:
    """The six field lattices stacked as ``data[c, i, j, k]``.

    Component order is ``E1, E2, E3, H1, H2, H3``.
    """

    grid: GridSpec
    data: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (6, *self.grid.shape):
            raise ValueError(f"field data shape {self.data.shape} != {(6, *self.grid.shape)}")

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "FieldState":
        return cls(grid, np.zeros((6, *grid.shape)), t)

    @classmethod
    def from_components(cls, grid: GridSpec, E, H, t: float = 0.0) -> "FieldState":
        return cls(grid, np.concatenate([np.asarray(E, float), np.asarray(H, float)]), t)

    @property
    def E(self) -> np.ndarray:
        return self.data[:3]

    @property
    def H(self) -> np.ndarray:
        return self.data[3:]

    def component(self, name: str) -> np.ndarray:
        return self.data[COMPONENTS.index(name)]

    def copy(self) -> "FieldState":
        return FieldState(self.grid, self.data.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())


# Variations du share the layout of a field state.
TangentState = FieldState


def _check_axis(axis) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"unknown axis {axis!r}") from None
    if axis not in (0, 1, 2):
        raise ValueError(f"unknown axis {axis!r}")
    return axis


def apply_diff(component: np.ndarray, axis, stencil: CirculantStencil) -> np.ndarray:
    """Apply a periodic stencil along one axis of a 3-D lattice.

    ``out[..., m, ...] = sum_d c_d * in[..., m - d, ...]`` along ``axis``, i.e. the
    action of ``B (x) I (x) I``, ``I (x) B (x) I`` or ``I (x) I (x) B``.
    """
    ax = _check_axis(axis)
    f = np.asarray(component, dtype=float)
    if f.ndim != 3:
        raise ValueError(f"expected a 3-D lattice, got shape {f.shape}")
    n1, n2, n3 = f.shape
    if f.shape[ax] != stencil.size:
        raise ValueError(f"stencil size {stencil.size} does not match extent {f.shape[ax]} along axis {ax}")
    B = stencil.matrix
    if ax == 0:
        return (B @ f.reshape(n1, n2 * n3)).reshape(f.shape)
    if ax == 1:
        return np.matmul(B, f)
    return (f.reshape(n1 * n2, n3) @ B.T).reshape(f.shape)


@dataclass(frozen=True)
class CurlOperator:
    """Discrete curl built from one derivative stencil per axis."""

    stencils: tuple[CirculantStencil, CirculantStencil, CirculantStencil]
    label: str = field(default="wavelet", compare=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(s.size for s in self.stencils)

    def d(self, f: np.ndarray, axis: int) -> np.ndarray:
        return apply_diff(f, axis, self.stencils[axis])

    def __call__(self, F: np.ndarray) -> np.ndarray:
        """Curl of a stacked vector lattice ``F[c, i, j, k]``."""
        if F.shape[0] != 3 or F.shape[1:] != self.shape:
            raise ValueError(f"curl expects shape {(3, *self.shape)}, got {F.shape}")
        d = self.d
        out = np.empty_like(F)
        out[0] = d(F[2], 1) - d(F[1], 2)
        out[1] = d(F[0], 2) - d(F[2], 0)
        out[2] = d(F[1], 0) - d(F[0], 1)
        return out


def wavelet_curl(grid: GridSpec, gamma: int = 10) -> CurlOperator:
    cc = connection_coefficients(gamma)
    stencils = tuple(diff_stencil(cc, J, N) for J, N in zip(grid.levels, grid.shape))
    return CurlOperator(stencils, label=f"wavelet-gamma{gamma}")


def fd_curl(grid: GridSpec, order: int = 2) -> CurlOperator:
    stencils = tuple(fd_stencil(order, J, N) for J, N in zip(grid.levels, grid.shape))
    return CurlOperator(stencils, label=f"fd-order{order}")


def discrete_curl(fields, stencils) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(A2 F3 - A3 F2, A3 F1 - A1 F3, A1 F2 - A2 F1)`` for three scalar lattices."""
    F1, F2, F3 = (np.asarray(f, dtype=float) for f in fields)
    if not (F1.shape == F2.shape == F3.shape):
        raise ValueError("curl components have inconsistent shapes")
    op = stencils if isinstance(stencils, CurlOperator) else CurlOperator(tuple(stencils))
    out = op(np.stack([F1, F2, F3]))
    return out[0], out[1], out[2]


def weighted_sum(values: np.ndarray, weight: float) -> float:
    """Deterministic compensated sum: numpy row sums, then ``math.fsum`` over rows."""
    rows = np.asarray(values, dtype=float).sum(axis=-1)
    return weight * math.fsum(rows.ravel().tolist())


def grid_inner_product(a: FieldState, b: FieldState) -> float:
    """``dx dy dz * sum over cells and six components of a*b``."""
    if a.grid != b.grid or a.data.shape != b.data.shape:
        raise ValueError("inner product of states on different grids")
    return weighted_sum(a.data * b.data, a.grid.cell_volume)


# Snapshot layout: magic, version, N1 N2 N3, dx dy dz, t, then the six
# components in i-fastest order, all little-endian.
_SNAP_MAGIC = b"SMXW"
_SNAP_HEADER = struct.Struct("<4sI3I3dd")


def write_snapshot(path, state: FieldState) -> Path:
    path = Path(path)
    header = _SNAP_HEADER.pack(_SNAP_MAGIC, 1, *state.grid.shape, *state.grid.spacing, state.t)
    body = np.asfortranarray(state.data.transpose(1, 2, 3, 0)).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes(order="F"))
    return path


def read_snapshot(path) -> tuple[tuple[int, int, int], tuple[float, float, float], float, np.ndarray]:
    """Return ``(shape, spacing, t, data[c, i, j, k])`` from a snapshot file."""
    raw = Path(path).read_bytes()
    magic, version, n1, n2, n3, dx, dy, dz, t = _SNAP_HEADER.unpack_from(raw)
    if magic != _SNAP_MAGIC or version != 1:
        raise ValueError(f"{path}: not a field snapshot")
    flat = np.frombuffer(raw, dtype="<f8", offset=_SNAP_HEADER.size)
    data = flat.reshape((n1, n2, n3, 6), order="F").transpose(3, 0, 1, 2)
    return (n1, n2, n3), (dx, dy, dz), t, np.array(data, dtype=float)
