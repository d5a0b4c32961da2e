"""Semi-implicit Crank-Nicolson pseudo-spectral solvers.

Every equation is written as ``u_t = L u + N0(u) + f`` with ``L`` diagonal in
Fourier space.  One step is

    u_hat[n+1] = ((1 + dt L/2) u_hat[n] + dt (N0(u[n]) + f)_hat) / (1 - dt L/2)

i.e. trapezoidal in the stiff linear part and forward Euler in the
nonlinear part.  Nonlinear products are dealiased with the 2/3 rule; the
forcing is not.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import spectral as sp
from .spectral import SpatialGrid

__all__ = [
    "NS2D",
    "Burgers",
    "KdV",
    "PdeSpec",
    "pde_from_dict",
    "Trajectory",
    "BlowUpError",
    "SolveStats",
    "cn_step",
    "cn_step_hat",
    "solve_batch",
    "solve_trajectory",
]

DEFAULT_CAP = 1e8


class BlowUpError(RuntimeError):
    """Solver state became non-finite or exceeded the magnitude cap."""

    def __init__(self, step: int, max_abs: float, cap: float):
        self.step = step
        self.max_abs = max_abs
        self.cap = cap
        super().__init__(f"solution blew up at step {step}: max|u| = {max_abs:.3e} (cap {cap:.1e})")


def _product_hat(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    return sp.forward(values, grid) * sp.dealias_mask(grid)


@dataclass(frozen=True)
class NS2D:
    """Vorticity form ``w_t + u.grad(w) = nu lap(w) + f`` on the 2D torus."""

    nu: float
    conservative: bool = False

    dims = 2
    name = "ns2d"

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")

    def linear_symbol(self, grid: SpatialGrid) -> np.ndarray:
        return self.nu * sp.laplacian_symbol(grid)

    def nonlinear(self, w_hat: np.ndarray, grid: SpatialGrid) -> tuple[np.ndarray, np.ndarray]:
        """Forcing-free ``N0`` in spectral space, plus ``w`` in physical space."""
        vx_hat, vy_hat = sp.velocity_from_vorticity_hat(w_hat, grid)
        if self.conservative:
            w, vx, vy = sp.inverse(np.stack([w_hat, vx_hat, vy_hat]), grid)
            fluxes = _product_hat(np.stack([vx * w, vy * w]), grid)
            adv = sp.derivative_symbol(grid, 1, 0) * fluxes[0] + sp.derivative_symbol(grid, 1, 1) * fluxes[1]
            return -adv, w
        buf = np.empty((5, *w_hat.shape), dtype=complex)
        buf[0] = w_hat
        buf[1] = vx_hat
        buf[2] = vy_hat
        np.multiply(sp.derivative_symbol(grid, 1, 0), w_hat, out=buf[3])
        np.multiply(sp.derivative_symbol(grid, 1, 1), w_hat, out=buf[4])
        w, vx, vy, wx, wy = sp.inverse(buf, grid)
        return -_product_hat(vx * wx + vy * wy, grid), w

    def to_dict(self) -> dict:
        return {"kind": self.name, "nu": self.nu, "conservative": self.conservative}


@dataclass(frozen=True)
class Burgers:
    """``u_t + u u_x = (1/R) u_xx + f``; advection evaluated as ``(u**2/2)_x``."""

    reynolds: float

    dims = 1
    name = "burgers"

    def __post_init__(self):
        if not self.reynolds > 0:
            raise ValueError(f"Reynolds number must be positive, got {self.reynolds}")

    def linear_symbol(self, grid: SpatialGrid) -> np.ndarray:
        return sp.derivative_symbol(grid, 2, 0) / self.reynolds

    def nonlinear(self, u_hat: np.ndarray, grid: SpatialGrid) -> tuple[np.ndarray, np.ndarray]:
        u = sp.inverse(u_hat, grid)
        return -0.5 * sp.derivative_symbol(grid, 1, 0) * _product_hat(u * u, grid), u

    def to_dict(self) -> dict:
        return {"kind": self.name, "reynolds": self.reynolds}


@dataclass(frozen=True)
class KdV:
    """Forced KdV ``u_t + lam u_x + 2 a u u_x + b u_xxx = f'``.

    Both linear terms are implicit; the nonlinearity is ``-a (u**2)_x``.
    """

    lambda_adv: float = 0.0
    alpha_nl: float = -0.5
    beta_disp: float = -1.0

    dims = 1
    name = "kdv"

    def linear_symbol(self, grid: SpatialGrid) -> np.ndarray:
        return -self.beta_disp * sp.derivative_symbol(grid, 3, 0) - self.lambda_adv * sp.derivative_symbol(grid, 1, 0)

    def nonlinear(self, u_hat: np.ndarray, grid: SpatialGrid) -> tuple[np.ndarray, np.ndarray]:
        u = sp.inverse(u_hat, grid)
        return -self.alpha_nl * sp.derivative_symbol(grid, 1, 0) * _product_hat(u * u, grid), u

    def to_dict(self) -> dict:
        return {
            "kind": self.name,
            "lambda_adv": self.lambda_adv,
            "alpha_nl": self.alpha_nl,
            "beta_disp": self.beta_disp,
        }


PdeSpec = Union[NS2D, Burgers, KdV]


def pde_from_dict(d: dict) -> PdeSpec:
    kind = d["kind"]
    if kind == "ns2d":
        return NS2D(float(d["nu"]), bool(d.get("conservative", False)))
    if kind == "burgers":
        return Burgers(float(d["reynolds"]))
    if kind == "kdv":
        return KdV(float(d["lambda_adv"]), float(d["alpha_nl"]), float(d["beta_disp"]))
    raise ValueError(f"unknown PDE kind {kind!r}")


@dataclass
class Trajectory:
    """Frames ``(F, *grid.shape)`` sampled every ``dt`` starting at ``t0``."""

    frames: np.ndarray
    dt: float
    grid: SpatialGrid
    t0: float = 0.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != self.grid.dims + 1 or self.frames.shape[1:] != self.grid.shape:
            raise ValueError(f"frames of shape {self.frames.shape} do not match grid {self.grid.shape}")
        if self.frames.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 frames")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))


@dataclass
class SolveStats:
    steps: int = 0
    wall_seconds: float = 0.0
    samples: int = 0

    @property
    def per_step_seconds(self) -> float:
        return self.wall_seconds / self.steps if self.steps else float("nan")


@dataclass(frozen=True)
class _Stepper:
    numer: np.ndarray
    denom: np.ndarray

    @classmethod
    def build(cls, spec: PdeSpec, grid: SpatialGrid, dt: float) -> "_Stepper":
        half = 0.5 * dt * spec.linear_symbol(grid)
        return cls(1.0 + half, 1.0 - half)

    def advance(self, u_hat, rhs_hat, dt):
        return (self.numer * u_hat + dt * rhs_hat) / self.denom


def _check_spec_grid(spec: PdeSpec, grid: SpatialGrid):
    if spec.dims != grid.dims:
        raise ValueError(f"{spec.name} needs a {spec.dims}D grid, got {grid.dims}D")


def _check_cap(values: np.ndarray, cap: float, step: int):
    peak = np.max(np.abs(values))
    if not peak <= cap:  # also catches NaN
        raise BlowUpError(step, float(peak), cap)


def cn_step_hat(u_hat, forcing_hat, spec: PdeSpec, dt: float, grid: SpatialGrid, nonlinear: bool = True):
    """One step in spectral space without any blow-up check."""
    stepper = _Stepper.build(spec, grid, dt)
    rhs = forcing_hat
    if nonlinear:
        rhs = spec.nonlinear(u_hat, grid)[0] + forcing_hat
    return stepper.advance(u_hat, rhs, dt)


def cn_step(
    u_n: np.ndarray,
    forcing: np.ndarray,
    spec: PdeSpec,
    dt: float,
    grid: SpatialGrid,
    *,
    nonlinear: bool = True,
    cap: float = DEFAULT_CAP,
) -> np.ndarray:
    """Advance ``u_n`` by one semi-implicit CN step of size ``dt``.

    ``nonlinear=False`` drops ``N0`` (the forcing is kept), leaving the pure
    per-mode CN recurrence.  Raises :class:`BlowUpError` if the result is
    non-finite or exceeds ``cap`` in magnitude.
    """
    _check_spec_grid(spec, grid)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u_hat = sp.forward(np.asarray(u_n, dtype=np.float64), grid)
    f_hat = sp.forward(np.broadcast_to(forcing, np.shape(u_n)), grid)
    out = sp.inverse(cn_step_hat(u_hat, f_hat, spec, dt, grid, nonlinear), grid)
    _check_cap(out, cap, 1)
    return out


def solve_batch(
    spec: PdeSpec,
    ic: np.ndarray,
    forcing: np.ndarray,
    steps: int,
    dt: float,
    record_stride: int,
    grid: SpatialGrid,
    *,
    cap: float = DEFAULT_CAP,
    stats: SolveStats | None = None,
) -> np.ndarray:
    """Integrate a batch of independent problems.

    ``ic`` and ``forcing`` are ``(B, *grid.shape)``; the result is
    ``(B, steps // record_stride + 1, *grid.shape)`` with frame 0 equal to
    ``ic``.  The forcing is held fixed in time.
    """
    _check_spec_grid(spec, grid)
    if steps < 1 or record_stride < 1 or steps % record_stride:
        raise ValueError(f"record_stride {record_stride} must divide steps {steps}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ic = np.asarray(ic, dtype=np.float64)
    batch = ic.shape[0]
    forcing = np.broadcast_to(np.asarray(forcing, dtype=np.float64), ic.shape)

    t_start = time.perf_counter()
    stepper = _Stepper.build(spec, grid, dt)
    f_hat = sp.forward(forcing, grid)
    u_hat = sp.forward(ic, grid)
    out = np.empty((batch, steps // record_stride + 1, *grid.shape))
    out[:, 0] = ic
    for step in range(steps):
        n_hat, u_phys = spec.nonlinear(u_hat, grid)
        if step:
            _check_cap(u_phys, cap, step)
            if step % record_stride == 0:
                out[:, step // record_stride] = u_phys
        u_hat = stepper.advance(u_hat, n_hat + f_hat, dt)
    final = sp.inverse(u_hat, grid)
    _check_cap(final, cap, steps)
    out[:, -1] = final

    if stats is not None:
        stats.steps += steps
        stats.samples += batch
        stats.wall_seconds += time.perf_counter() - t_start
    return out


def solve_trajectory(
    spec: PdeSpec,
    ic: np.ndarray,
    forcing: np.ndarray,
    steps: int,
    dt: float,
    record_stride: int,
    grid: SpatialGrid,
    *,
    cap: float = DEFAULT_CAP,
    stats: SolveStats | None = None,
) -> Trajectory:
    frames = solve_batch(
        spec, np.asarray(ic)[None], np.asarray(forcing)[None], steps, dt, record_stride, grid,
        cap=cap, stats=stats,
    )[0]
    return Trajectory(frames, dt * record_stride, grid)
