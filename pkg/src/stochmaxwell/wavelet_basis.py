"""Interpolating-wavelet differentiation stencils.

The collocation derivative on a uniform periodic grid is a circulant matrix
whose entries are the integer samples of the derivative of the Daubechies
autocorrelation function ``theta``. ``theta`` is the fundamental function of
Deslauriers-Dubuc interpolating subdivision, so its two-scale mask is the DD
filter and the derivative samples follow from a small eigenproblem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np


class BasisError(ValueError):
    """Raised when a filter, coefficient table or stencil cannot be built."""


@dataclass(frozen=True)
class RefinementFilter:
    """Interpolatory two-scale mask ``theta(x) = sum_l a_l theta(2x - l)``."""

    half_order: int
    taps: dict[int, Fraction]

    @property
    def gamma(self) -> int:
        return 2 * self.half_order

    def tap(self, l: int) -> Fraction:
        return self.taps.get(l, Fraction(0))

    def as_float(self) -> dict[int, float]:
        return {l: float(a) for l, a in sorted(self.taps.items())}


@dataclass(frozen=True)
class ConnectionCoefficients:
    """Derivative values ``theta'(k)`` for ``k = -(gamma-2) .. gamma-2``."""

    gamma: int
    offsets: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __getitem__(self, k: int) -> float:
        kmax = self.gamma - 2
        if abs(k) > kmax:
            return 0.0
        return float(self.values[k + kmax])

    def table(self) -> list[tuple[int, float]]:
        return [(int(k), float(v)) for k, v in zip(self.offsets, self.values)]


@dataclass(frozen=True)
class CirculantStencil:
    """Banded periodic derivative stencil ``out[m] = sum_d c_d in[m - d]``.

    ``coeffs[d]`` already carries the ``2**level`` scale. Offsets that wrap
    onto the same residue modulo ``size`` are summed, which keeps the matrix
    skew-symmetric for any grid size.
    """

    level: int
    size: int
    offsets: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    @property
    def bandwidth(self) -> int:
        return int(np.abs(self.offsets).max())

    def coefficient(self, d: int) -> float:
        hit = np.nonzero(self.offsets == d)[0]
        return float(self.coeffs[hit[0]]) if hit.size else 0.0

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense circulant form, cached; used as a BLAS kernel on small grids."""
        n = self.size
        B = np.zeros((n, n))
        rows = np.arange(n)
        for d, c in zip(self.offsets, self.coeffs):
            np.add.at(B, (rows, (rows - d) % n), c)
        B.setflags(write=False)
        return B

    def apply_banded(self, f: np.ndarray, axis: int = 0) -> np.ndarray:
        """Reference shifted-sum application along ``axis``; O(bandwidth) per point."""
        if f.shape[axis] != self.size:
            raise ValueError(
                f"stencil size {self.size} does not match extent {f.shape[axis]} along axis {axis}"
            )
        out = np.zeros_like(f, dtype=float)
        for d, c in zip(self.offsets, self.coeffs):
            if c != 0.0:
                out += c * np.roll(f, int(d), axis=axis)
        return out


def dd_filter(p: int) -> RefinementFilter:
    """Deslauriers-Dubuc filter of half-order ``p`` (reproduces degree ``2p-1``).

    Odd taps are the Lagrange weights that interpolate the midpoint from the
    ``2p`` nearest samples; even taps vanish except ``a_0 = 1``.
    """
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise BasisError(f"half-order p must be a positive integer, got {p!r}")
    nodes = [2 * j - 1 for j in range(-p + 1, p + 1)]
    taps = {0: Fraction(1)}
    for xj in nodes:
        w = Fraction(1)
        for xk in nodes:
            if xk != xj:
                w *= Fraction(-xk, xj - xk)
        taps[xj] = w
    return RefinementFilter(half_order=int(p), taps=dict(sorted(taps.items())))


def refinement_operator(filt: RefinementFilter) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of ``v(n) -> 2 sum_l a_l v(2n - l)`` on ``|n| <= gamma - 2``."""
    kmax = filt.gamma - 2
    ks = np.arange(-kmax, kmax + 1)
    T = np.zeros((ks.size, ks.size))
    for row, n in enumerate(ks):
        for l, a in filt.taps.items():
            k = 2 * n - l
            if abs(k) <= kmax:
                T[row, k + kmax] += 2.0 * float(a)
    return ks, T


def connection_coefficients(gamma: int) -> ConnectionCoefficients:
    """Connection coefficients ``theta'(k)`` of the order-``gamma`` autocorrelation.

    Solves ``T v = v`` together with ``sum_k k v_k = -1`` as one overdetermined
    linear system, after checking that 1 is an eigenvalue of ``T``.
    """
    if not isinstance(gamma, (int, np.integer)) or gamma < 4 or gamma % 2:
        raise BasisError(f"gamma must be an even integer >= 4, got {gamma!r}")
    filt = dd_filter(gamma // 2)
    ks, T = refinement_operator(filt)

    gap = np.min(np.abs(np.linalg.eigvals(T) - 1.0))
    if gap > 1e-10:
        raise BasisError(f"refinement operator has no eigenvalue 1 (closest gap {gap:.3e})")

    n = ks.size
    A = np.vstack([T - np.eye(n), ks[None, :].astype(float)])
    rhs = np.zeros(n + 1)
    rhs[-1] = -1.0
    v, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    v = 0.5 * (v - v[::-1])
    v[ks == 0] = 0.0

    residual = np.max(np.abs(T @ v - v))
    if residual > 1e-12:
        raise BasisError(f"connection coefficients not converged (residual {residual:.3e})")
    v.setflags(write=False)
    ks.setflags(write=False)
    return ConnectionCoefficients(gamma=int(gamma), offsets=ks, values=v)


def diff_stencil(coeffs: ConnectionCoefficients, level: int, size: int) -> CirculantStencil:
    """Periodic derivative stencil on ``size`` points of spacing ``2**-level``.

    The band runs over ``|d| <= gamma - 1``; the outermost entries are exactly
    zero because ``theta'`` vanishes at the edge of its support.
    """
    band = coeffs.gamma - 1
    if size < band:
        raise BasisError(f"grid size {size} too small for stencil bandwidth {band}")
    if size % (2**level):
        raise BasisError(f"size {size} is not an integer multiple of 2**{level}")
    offsets = np.arange(-band, band + 1)
    c = np.array([coeffs[int(d)] for d in offsets]) * float(2**level)
    offsets.setflags(write=False)
    c.setflags(write=False)
    return CirculantStencil(level=level, size=size, offsets=offsets, coeffs=c)


def central_difference_weights(order: int) -> dict[int, Fraction]:
    """Weights ``w_j`` with ``f'(0) ~ sum_j w_j f(j)`` exact to ``order``, ``|j| <= order/2``."""
    if order < 2 or order % 2:
        raise BasisError(f"central difference order must be even and >= 2, got {order!r}")
    half = order // 2
    # antisymmetric: solve sum_{j>0} 2 j^(2q+1) w_j = delta_{q0}, q = 0..half-1
    A = [[Fraction(2 * j ** (2 * q + 1)) for j in range(1, half + 1)] for q in range(half)]
    b = [Fraction(int(q == 0)) for q in range(half)]
    w = _solve_exact(A, b)
    out = {0: Fraction(0)}
    for j, wj in enumerate(w, start=1):
        out[j] = wj
        out[-j] = -wj
    return dict(sorted(out.items()))


def fd_stencil(order: int, level: int, size: int) -> CirculantStencil:
    """Central finite-difference stencil in the same ``out[m] = sum c_d in[m-d]`` layout."""
    w = central_difference_weights(order)
    half = order // 2
    if size < 2 * half + 1:
        raise BasisError(f"grid size {size} too small for order-{order} central differences")
    offsets = np.arange(-half, half + 1)
    # in[m - d] with d = -j  <=>  sample at m + j
    c = np.array([float(w[-int(d)]) for d in offsets]) * float(2**level)
    offsets.setflags(write=False)
    c.setflags(write=False)
    return CirculantStencil(level=level, size=size, offsets=offsets, coeffs=c)


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]
