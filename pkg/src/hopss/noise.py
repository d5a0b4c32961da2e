"""Synthetic noise models for the time-invariant perturbation term.

A relative level ``epsilon`` maps to an absolute amplitude
``A = epsilon * max|x|`` of the clean reference ``x``.  Gaussian noise is drawn
with standard deviation ``A``; the structured patterns (multi-sine, Perlin,
random walk) are built along the last axis at the periodic points ``i / L``,
rescaled so ``max|eta| = A`` and broadcast over any leading axes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "NOISE_KINDS",
    "NoiseSpec",
    "noise_amplitude",
    "synthesize_noise",
    "fade",
    "multi_sine_pattern",
    "perlin_pattern",
    "perlin_raw",
    "random_walk_pattern",
    "unit_coordinates",
]

NOISE_KINDS = ("gaussian", "multi_sine", "perlin", "random_walk", "zero")
AMPLITUDE_FLOOR = 1e-8


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model.

    ``std`` is only used by the Gaussian kind: when set it is the absolute
    standard deviation and ``epsilon`` is ignored.
    """

    kind: str = "gaussian"
    epsilon: float = 1e-3
    k_modes: int = 8
    cells: int = 32
    std: float | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.k_modes < 1 or self.cells < 1:
            raise ValueError("k_modes and cells must be >= 1")
        if self.std is not None and not self.std >= 0:
            raise ValueError(f"std must be non-negative, got {self.std}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        std = d.get("std")
        return cls(
            kind=d["kind"],
            epsilon=float(d["epsilon"]),
            k_modes=int(d.get("k_modes", 8)),
            cells=int(d.get("cells", 32)),
            std=None if std is None else float(std),
        )


def noise_amplitude(epsilon: float, reference: np.ndarray) -> float:
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    if epsilon == 0:
        return 0.0
    peak = float(np.max(np.abs(reference)))
    if peak == 0:
        return AMPLITUDE_FLOOR
    return epsilon * peak


def fade(u):
    return u * u * u * (u * (u * 6 - 15) + 10)


def unit_coordinates(length: int) -> np.ndarray:
    """Periodic sample points ``i / length`` in [0, 1).

    With ``cells = length - 1`` an endpoint-inclusive grid would put every
    sample on a Perlin lattice point and the pattern would vanish.
    """
    return np.arange(length) / length


def multi_sine_pattern(length: int, k_modes: int, rng: np.random.Generator) -> np.ndarray:
    s = unit_coordinates(length)
    a = rng.uniform(-1, 1, k_modes)
    b = rng.uniform(-1, 1, k_modes)
    phase = rng.uniform(0, 2 * np.pi, k_modes)  # one phase shared by sin and cos
    arg = 2 * np.pi * np.arange(1, k_modes + 1)[:, None] * s + phase[:, None]
    return (a[:, None] * np.sin(arg) + b[:, None] * np.cos(arg)).sum(axis=0)


def perlin_raw(s: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """1D gradient noise at coordinates ``s`` in [0, 1] over ``len(gradients) - 1`` cells."""
    cells = len(gradients) - 1
    t = np.asarray(s, dtype=np.float64) * cells
    i = np.minimum(np.floor(t).astype(int), cells - 1)
    u = t - i
    v0 = gradients[i] * u
    v1 = gradients[i + 1] * (u - 1)
    return v0 + (v1 - v0) * fade(u)


def perlin_pattern(length: int, cells: int, rng: np.random.Generator) -> np.ndarray:
    c = max(1, min(cells, length - 1))
    gradients = rng.uniform(-1, 1, c + 1)
    return perlin_raw(unit_coordinates(length), gradients)


def random_walk_pattern(length: int, rng: np.random.Generator) -> np.ndarray:
    walk = np.cumsum(rng.uniform(-1, 1, length))
    return walk - walk.mean()


def _rescale(pattern: np.ndarray, amplitude: float) -> np.ndarray:
    peak = np.max(np.abs(pattern))
    if peak == 0:
        return np.zeros_like(pattern)
    return amplitude * (pattern / peak)


def synthesize_noise(spec: NoiseSpec, reference: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Noise field with the shape of ``reference``."""
    reference = np.asarray(reference)
    if spec.kind == "zero":
        return np.zeros(reference.shape)
    if spec.kind == "gaussian":
        std = spec.std if spec.std is not None else noise_amplitude(spec.epsilon, reference)
        return rng.normal(0.0, 1.0, reference.shape) * std

    amplitude = noise_amplitude(spec.epsilon, reference)
    length = reference.shape[-1]
    if spec.kind == "multi_sine":
        pattern = multi_sine_pattern(length, spec.k_modes, rng)
    elif spec.kind == "perlin":
        pattern = perlin_pattern(length, spec.cells, rng)
    else:
        pattern = random_walk_pattern(length, rng)
    return np.broadcast_to(_rescale(pattern, amplitude), reference.shape).copy()
