"""Time stepping: stochastic implicit midpoint (wavelet collocation) and an FDM baseline.

Both schemes advance

    E' = E + dt curl H* - lam H* dW
    H' = H - dt curl E* + lam E* dW

with ``X* = (X + X')/2`` for the midpoint scheme and ``X* = X`` for the explicit
baseline. ``dW`` varies along x only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .diagnostics import DiagnosticsRecord, energy
from .grid import CurlOperator, FieldState, GridSpec, fd_curl, wavelet_curl
from .noise import NoiseSpec, WienerIncrements, sample_increments

log = logging.getLogger(__name__)

SCHEMES = ("wavelet-midpoint", "fdm-baseline")


class FixedPointError(RuntimeError):
    """Fixed-point iteration failed to converge."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BlowupError(FloatingPointError):
    """A state stopped being finite."""


class StepError(RuntimeError):
    """A step failed inside ``evolve``; carries the step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 0.005
    scheme: str = "wavelet-midpoint"
    fp_tol: float = 1e-13
    fp_max_iters: int = 200
    gamma: int = 10
    fdm_order: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.fp_max_iters < 1:
            raise ValueError("fp_max_iters must be >= 1")


def build_operator(grid: GridSpec, cfg: StepperConfig) -> CurlOperator:
    if cfg.scheme == "wavelet-midpoint":
        return wavelet_curl(grid, cfg.gamma)
    return fd_curl(grid, cfg.fdm_order)


@dataclass(frozen=True)
class FixedPointResult:
    value: np.ndarray
    iterations: int
    residual: float


def fixed_point_solve(
    rhs_map: Callable[[np.ndarray], np.ndarray],
    u_guess,
    fp_tol: float = 1e-13,
    fp_max_iters: int = 200,
) -> FixedPointResult:
    """Picard iteration ``u <- rhs_map(u)`` until the max-norm update is ``<= fp_tol``.

    Raises ``FixedPointError`` on divergence (update grew five times in a row)
    or when the iteration cap is hit.
    """
    u = np.asarray(u_guess, dtype=float)
    prev = math.inf
    growing = 0
    for it in range(1, fp_max_iters + 1):
        nxt = np.asarray(rhs_map(u), dtype=float)
        delta = float(np.max(np.abs(nxt - u))) if nxt.size else 0.0
        u = nxt
        if not math.isfinite(delta):
            raise FixedPointError("fixed-point iterate is not finite; reduce dt", delta, it)
        if delta <= fp_tol:
            return FixedPointResult(u, it, delta)
        growing = growing + 1 if delta > prev else 0
        if growing >= 5:
            raise FixedPointError(
                f"fixed-point iteration diverging (update {delta:.3e} after {it} iterations); reduce dt",
                delta,
                it,
            )
        prev = delta
    raise FixedPointError(
        f"fixed-point iteration did not reach {fp_tol:.1e} in {fp_max_iters} iterations "
        f"(last update {delta:.3e})",
        delta,
        fp_max_iters,
    )


def _noise_lattice(dW: Optional[WienerIncrements], lam: float, grid: GridSpec) -> Optional[np.ndarray]:
    if dW is None or lam == 0.0:
        return None
    w = np.asarray(dW.values, dtype=float)
    if w.shape != (grid.shape[0],):
        raise ValueError(f"noise increments have shape {w.shape}, expected ({grid.shape[0]},)")
    return (lam * w)[:, None, None]


def _midpoint_solve(data: np.ndarray, lw: Optional[np.ndarray], dt: float, curl: CurlOperator,
                    fp_tol: float, fp_max_iters: int) -> FixedPointResult:
    E, H = data[:3], data[3:]
    h = 0.5 * dt
    cE, cH = curl(E), curl(H)
    if lw is None:
        rE, rH = E + h * cH, H - h * cE
        guess = np.concatenate([E + dt * cH, H - dt * cE])

        def sweep(u):
            return np.concatenate([rE + h * curl(u[3:]), rH - h * curl(u[:3])])
    else:
        # the cellwise noise rotation is inverted exactly; only the curl is iterated
        a = 0.5 * lw
        inv = 1.0 / (1.0 + a * a)
        rE, rH = E - a * H + h * cH, H + a * E - h * cE
        guess = np.concatenate([E + dt * cH - lw * H, H - dt * cE + lw * E])

        def sweep(u):
            sE = rE + h * curl(u[3:])
            sH = rH - h * curl(u[:3])
            return np.concatenate([(sE - a * sH) * inv, (sH + a * sE) * inv])

    return fixed_point_solve(sweep, guess, fp_tol, fp_max_iters)


def midpoint_advance(u: FieldState, dW: Optional[WienerIncrements], lam: float, cfg: StepperConfig,
                     ops: CurlOperator, reverse: bool = False) -> tuple[FieldState, int]:
    """One midpoint step; returns the new state and the fixed-point iteration count."""
    if ops.shape != u.grid.shape:
        raise ValueError("operator and state grids differ")
    sign = -1.0 if reverse else 1.0
    lw = _noise_lattice(dW, lam, u.grid)
    if lw is not None:
        lw = sign * lw
    res = _midpoint_solve(u.data, lw, sign * cfg.dt, ops, cfg.fp_tol, cfg.fp_max_iters)
    if not np.isfinite(res.value).all():
        raise BlowupError("midpoint step produced non-finite values")
    return FieldState(u.grid, res.value, u.t + sign * cfg.dt), res.iterations


def midpoint_step(u: FieldState, dW: Optional[WienerIncrements], cfg: StepperConfig,
                  ops: CurlOperator, lam: float = 1.0, reverse: bool = False) -> FieldState:
    """Stochastic implicit midpoint wavelet-collocation step.

    ``reverse=True`` applies the inverse map (step of ``-dt`` with ``-dW``).
    """
    if cfg.scheme != "wavelet-midpoint":
        raise ValueError("midpoint_step requires scheme 'wavelet-midpoint'")
    return midpoint_advance(u, dW, lam, cfg, ops, reverse)[0]


def tangent_step(v: FieldState, dW: Optional[WienerIncrements], cfg: StepperConfig,
                 ops: CurlOperator, lam: float = 1.0) -> FieldState:
    """Variation of the midpoint map; the scheme is linear so this is the same map."""
    return midpoint_step(v, dW, cfg, ops, lam)


def fdm_baseline_step(u: FieldState, dW: Optional[WienerIncrements], cfg: StepperConfig,
                      ops: CurlOperator, lam: float = 1.0) -> FieldState:
    """Explicit Euler-Maruyama step with a central-difference curl."""
    if cfg.scheme != "fdm-baseline":
        raise ValueError("fdm_baseline_step requires scheme 'fdm-baseline'")
    E, H = u.E, u.H
    dt = cfg.dt
    lw = _noise_lattice(dW, lam, u.grid)
    with np.errstate(over="ignore", invalid="ignore"):
        newE = E + dt * ops(H)
        newH = H - dt * ops(E)
        if lw is not None:
            newE -= lw * H
            newH += lw * E
        data = np.concatenate([newE, newH])
    if not np.isfinite(data).all():
        raise BlowupError("fdm baseline step overflowed")
    return FieldState(u.grid, data, u.t + dt)


def step(u: FieldState, dW: Optional[WienerIncrements], lam: float, cfg: StepperConfig,
         ops: CurlOperator) -> tuple[FieldState, int]:
    if cfg.scheme == "wavelet-midpoint":
        return midpoint_advance(u, dW, lam, cfg, ops)
    return fdm_baseline_step(u, dW, cfg, ops, lam), 0


IncrementSource = Union[Callable[[int], WienerIncrements], Sequence[WienerIncrements]]


@dataclass
class Trajectory:
    final: FieldState
    records: list[DiagnosticsRecord] = field(default_factory=list)


def step_count(T: float, dt: float) -> int:
    K = int(round(T / dt))
    if K < 0 or abs(K * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"final time {T} is not an integer multiple of dt={dt}")
    return K


def evolve(
    u0: FieldState,
    cfg: StepperConfig,
    noise: Optional[NoiseSpec],
    T: float,
    observers: Sequence[Callable[[int, FieldState, DiagnosticsRecord], None]] = (),
    traj: int = 0,
    increments: Optional[IncrementSource] = None,
    ops: Optional[CurlOperator] = None,
    record_energy: bool = True,
) -> Trajectory:
    """Advance ``u0`` to time ``T`` in ``T/dt`` steps.

    Increments come from ``increments`` when given (a sequence indexed by step
    or a callable), otherwise they are sampled from ``noise`` with keys
    ``(noise.base_seed, traj, n)``. The record list starts with step 0.
    """
    K = step_count(T, cfg.dt)
    ops = ops or build_operator(u0.grid, cfg)
    lam = 0.0 if noise is None else float(noise.lam)

    def get_dW(n: int) -> Optional[WienerIncrements]:
        if lam == 0.0:
            return None
        if increments is None:
            return sample_increments(noise, traj, n, cfg.dt, u0.grid)
        if callable(increments):
            return increments(n)
        return increments[n]

    e0 = energy(u0) if record_energy else math.nan
    records = [DiagnosticsRecord(0, u0.t, e0, 0.0, 0)] if K else []
    u = u0
    for n in range(K):
        try:
            u, iters = step(u, get_dW(n), lam, cfg, ops)
        except (FixedPointError, BlowupError, ValueError) as exc:
            raise StepError(n, exc) from exc
        e = energy(u) if record_energy else math.nan
        rec = DiagnosticsRecord(n + 1, u0.t + (n + 1) * cfg.dt, e, e - e0, iters)
        records.append(rec)
        for obs in observers:
            obs(n + 1, u, rec)
    return Trajectory(u, records)
