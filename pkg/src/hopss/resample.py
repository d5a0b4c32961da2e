"""Temporal and spatial downsampling of trajectories.

Both operations are pure index selection: kept values are bit-identical to
the fine-grid values.  ``downsample_space(..., method="spectral")`` is the
only path that changes values (Fourier truncation) and is never the default.
"""

from __future__ import annotations

import numpy as np

from . import spectral as sp
from .pde import Trajectory
from .spectral import SpatialGrid

__all__ = ["downsample_time", "downsample_space", "subsample_field"]


def downsample_time(traj: Trajectory, stride: int) -> Trajectory:
    if stride < 1 or (len(traj) - 1) % stride:
        raise ValueError(f"stride {stride} does not divide {len(traj) - 1} frame intervals")
    return Trajectory(traj.frames[::stride].copy(), traj.dt * stride, traj.grid, traj.t0)


def _coarse_grid(grid: SpatialGrid, factor: int) -> SpatialGrid:
    if factor < 1 or grid.n % factor:
        raise ValueError(f"factor {factor} does not divide grid size {grid.n}")
    return SpatialGrid(grid.dims, grid.n // factor, grid.length)


def subsample_field(values: np.ndarray, grid: SpatialGrid, factor: int) -> tuple[np.ndarray, SpatialGrid]:
    """Keep every ``factor``-th point of the trailing grid axes, starting at 0."""
    coarse = _coarse_grid(grid, factor)
    index = (Ellipsis,) + (slice(None, None, factor),) * grid.dims
    return np.ascontiguousarray(values[index]), coarse


def _spectral_truncate(values: np.ndarray, grid: SpatialGrid, coarse: SpatialGrid) -> np.ndarray:
    spec = sp.forward(values, grid)
    m = coarse.n
    if grid.dims == 1:
        kept = spec[..., : m // 2 + 1].copy()
    else:
        rows = np.r_[0 : m // 2, grid.n - m // 2 : grid.n]
        kept = spec[..., rows, : m // 2 + 1].copy()
    # the coarse Nyquist mode must be real; fold its conjugate partner in
    kept[..., -1] = kept[..., -1].real
    if grid.dims == 2:
        kept[..., m // 2, :] = kept[..., m // 2, :].real
    return sp.inverse(kept, coarse) * (coarse.size / grid.size)


def downsample_space(traj: Trajectory, factor: int, method: str = "subsample") -> Trajectory:
    if method == "subsample":
        frames, coarse = subsample_field(traj.frames, traj.grid, factor)
    elif method == "spectral":
        coarse = _coarse_grid(traj.grid, factor)
        frames = traj.frames.copy() if factor == 1 else _spectral_truncate(traj.frames, traj.grid, coarse)
    else:
        raise ValueError(f"unknown downsampling method {method!r}")
    return Trajectory(frames, traj.dt, coarse, traj.t0)
