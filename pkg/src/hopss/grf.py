"""Gaussian random fields on periodic grids.

A draw has covariance operator ``sigma**2 * (-lap + tau**2)**(-alpha)``: in
the Karhunen-Loeve expansion over the orthonormal Fourier modes of the domain,
mode ``k`` carries an independent coefficient of variance
``sigma**2 * (|k|**2 + tau**2)**(-alpha)``.  The zero mode is dropped so every
draw has zero spatial mean.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .spectral import SpatialGrid, forward, inverse, laplacian_symbol

__all__ = ["GrfParams", "grf_mode_variance", "sample_grf"]


@dataclass(frozen=True)
class GrfParams:
    tau: float
    alpha: float
    sigma: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def check(self, dims: int) -> None:
        if not self.alpha > dims / 2:
            raise ValueError(
                f"alpha must exceed dims/2 = {dims / 2} for finite variance, got {self.alpha}"
            )

    @classmethod
    def with_default_sigma(cls, tau: float, alpha: float, dims: int) -> "GrfParams":
        """``sigma = tau**(alpha - dims/2)``, which makes the low modes O(1)."""
        return cls(tau, alpha, tau ** (alpha - dims / 2))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GrfParams":
        return cls(float(d["tau"]), float(d["alpha"]), float(d["sigma"]))


def grf_mode_variance(grid: SpatialGrid, params: GrfParams) -> np.ndarray:
    """Variance of each Fourier coefficient (half-spectrum layout), zero mode = 0."""
    var = params.sigma**2 * (-laplacian_symbol(grid) + params.tau**2) ** (-params.alpha)
    var.flat[0] = 0.0
    return var


def sample_grf(grid: SpatialGrid, params: GrfParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw one field (or ``size`` fields stacked on a leading axis).

    White noise is filtered in Fourier space, which gives exact Hermitian
    symmetry: the transform of i.i.d. ``N(0, 1)`` point values has
    ``E|c_k|**2 = n**dims`` on every mode, Nyquist included.
    """
    params.check(grid.dims)
    shape = grid.shape if size is None else (size, *grid.shape)
    white = rng.standard_normal(shape)
    # irfftn divides by n**dims; the white spectrum carries an extra sqrt(n**dims)
    scale = np.sqrt(grf_mode_variance(grid, params) * grid.size)
    return inverse(forward(white, grid) * scale, grid)
