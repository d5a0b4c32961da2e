"""Homologous perturbation in solution space.

New samples are ``u_new = u_i + mu * u_j + xi`` for two distinct base
trajectories and a small time-invariant noise field ``xi``.  The matching
forcing comes from the discrete residual ``R``, the forcing that makes the
coarse semi-implicit CN relation hold between consecutive frames:

    f_new = f_i + (R(u_new) - R(u_i))

so ``(u_new, f_new)`` violates the discrete equation by exactly as much as
``(u_i, f_i)`` does, up to roundoff.

Per-sample randomness comes from ``sample_rng(seed, index)``, a
``SeedSequence(seed, spawn_key=(index,))`` stream, so output does not depend
on how samples are split across workers.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import spectral as sp
from .noise import NoiseSpec, synthesize_noise
from .pde import PdeSpec, Trajectory

__all__ = [
    "SolutionPair",
    "HopssConfig",
    "sample_rng",
    "residual_frames",
    "discrete_residual",
    "homologous_perturb",
    "rhs_variation",
    "draw_pair",
    "iter_chunks",
    "iter_hopss_pairs",
    "generate_hopss_dataset",
    "hopss_provenance",
    "mixup_weights",
    "mixup_sample",
    "iter_mixup_pairs",
    "generate_mixup_dataset",
]

# Fixed work unit for batched residuals; independent of the worker count.
CHUNK = 16


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


@dataclass
class SolutionPair:
    """A trajectory and its forcing.

    ``f`` is either one time-invariant field (``grid.shape``) or one field per
    frame interval (``(len(u) - 1, *grid.shape)``).
    """

    u: Trajectory
    f: np.ndarray
    pde: PdeSpec
    provenance: dict = field(default_factory=lambda: {"kind": "base"})

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=np.float64)
        shape = self.u.grid.shape
        if self.f.shape != shape and self.f.shape != (len(self.u) - 1, *shape):
            raise ValueError(
                f"forcing shape {self.f.shape} matches neither {shape} nor {(len(self.u) - 1, *shape)}"
            )

    @property
    def per_interval(self) -> bool:
        return self.f.ndim == self.u.grid.dims + 1

    def forcing_per_interval(self) -> np.ndarray:
        if self.per_interval:
            return self.f
        return np.broadcast_to(self.f, (len(self.u) - 1, *self.f.shape))


@dataclass(frozen=True)
class HopssConfig:
    mu: float = 1e-3
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec("gaussian", epsilon=0.0, std=1e-4))
    count: int = 1000
    pair_policy: str = "uniform_distinct"

    def __post_init__(self):
        if not (np.isfinite(self.mu) and 0 <= self.mu < 1):
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.pair_policy != "uniform_distinct":
            raise ValueError(f"unsupported pair policy {self.pair_policy!r}")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "noise": self.noise.to_dict(), "count": self.count, "pair_policy": self.pair_policy}

    @classmethod
    def from_dict(cls, d: dict) -> "HopssConfig":
        return cls(
            mu=float(d["mu"]),
            noise=NoiseSpec.from_dict(d["noise"]),
            count=int(d["count"]),
            pair_policy=d.get("pair_policy", "uniform_distinct"),
        )


def residual_frames(frames: np.ndarray, dt: float, spec: PdeSpec, grid: sp.SpatialGrid) -> np.ndarray:
    """Batched residual over the frame axis (``-grid.dims - 1``)."""
    if frames.shape[-grid.dims - 1] < 2:
        raise ValueError("the residual needs at least two frames")
    u_hat = sp.forward(frames, grid)
    lead = (slice(None),) * (u_hat.ndim - grid.dims - 1)
    now = u_hat[lead + (slice(None, -1),)]
    nxt = u_hat[lead + (slice(1, None),)]
    n0, _ = spec.nonlinear(now, grid)
    r_hat = (nxt - now) / dt - 0.5 * spec.linear_symbol(grid) * (nxt + now) - n0
    return sp.inverse(r_hat, grid)


def discrete_residual(u: Trajectory, spec: PdeSpec) -> np.ndarray:
    """Per-interval forcing implied by ``u`` under the coarse CN relation.

    Exactly inverts one coarse ``cn_step``: if ``u[n+1] = cn_step(u[n], f)``
    with step ``u.dt``, then ``R(u)[n] == f`` up to roundoff.
    """
    if spec.dims != u.grid.dims:
        raise ValueError(f"{spec.name} needs a {spec.dims}D grid")
    return residual_frames(u.frames, u.dt, spec, u.grid)


def _check_aligned(a: Trajectory, b: Trajectory):
    if a.grid != b.grid or a.frames.shape != b.frames.shape or a.dt != b.dt:
        raise ValueError(
            f"trajectories are not aligned: {a.frames.shape}@dt={a.dt} vs {b.frames.shape}@dt={b.dt}"
        )


def homologous_perturb(u_i: Trajectory, u_j: Trajectory, mu: float, xi: np.ndarray) -> Trajectory:
    _check_aligned(u_i, u_j)
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != u_i.grid.shape:
        raise ValueError(f"noise shape {xi.shape} does not match grid {u_i.grid.shape}")
    return Trajectory(u_i.frames + mu * u_j.frames + xi, u_i.dt, u_i.grid, u_i.t0)


def rhs_variation(u_new: Trajectory, u_i: Trajectory, f_i: np.ndarray, spec: PdeSpec) -> np.ndarray:
    """``f_i + (R(u_new) - R(u_i))`` for per-interval ``f_i``."""
    _check_aligned(u_new, u_i)
    f_i = np.asarray(f_i)
    if f_i.shape != (len(u_i) - 1, *u_i.grid.shape):
        raise ValueError(f"forcing shape {f_i.shape} does not match {len(u_i) - 1} intervals")
    return f_i + (discrete_residual(u_new, spec) - discrete_residual(u_i, spec))


def draw_pair(n_base: int, rng: np.random.Generator) -> tuple[int, int]:
    """Uniform ordered pair ``(i, j)`` with ``i != j``."""
    i = int(rng.integers(n_base))
    j = int(rng.integers(n_base - 1))
    return i, j + (j >= i)


def _check_base(base: list[SolutionPair], minimum: int):
    if len(base) < minimum:
        raise ValueError(f"need at least {minimum} base pairs, got {len(base)}")
    ref = base[0]
    for k, pair in enumerate(base[1:], 1):
        if pair.pde != ref.pde:
            raise ValueError(f"base pair {k} has PDE {pair.pde}, expected {ref.pde}")
        _check_aligned(pair.u, ref.u)


def iter_chunks(fn, count: int, threads: int = 1) -> Iterator:
    """Yield ``fn(start, stop)`` over fixed chunks of ``range(count)``, in order.

    With ``threads > 1`` up to ``2 * threads`` chunks are in flight at once.
    """
    bounds = [(a, min(a + CHUNK, count)) for a in range(0, count, CHUNK)]
    if threads <= 1:
        for a, b in bounds:
            yield fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = deque()
        for a, b in bounds:
            pending.append(pool.submit(fn, a, b))
            if len(pending) >= 2 * threads:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def iter_hopss_pairs(
    base: list[SolutionPair], config: HopssConfig, seed: int, threads: int = 1
) -> Iterator[SolutionPair]:
    """Lazily build ``config.count`` perturbed pairs from ``base``.

    Sample ``s`` draws ``(i, j)`` and then its noise from ``sample_rng(seed, s)``;
    the noise amplitude refers to the first frame of ``u_i``.
    """
    _check_base(base, 2)
    spec = base[0].pde
    grid = base[0].u.grid
    dt = base[0].u.dt
    u_base = np.stack([p.u.frames for p in base])
    f_base = np.stack([p.forcing_per_interval() for p in base])
    r_base = np.concatenate(
        list(iter_chunks(lambda a, b: residual_frames(u_base[a:b], dt, spec, grid), len(base), threads))
    )

    def work(start: int, stop: int):
        idx, frames = [], []
        for s in range(start, stop):
            rng = sample_rng(seed, s)
            i, j = draw_pair(len(base), rng)
            xi = synthesize_noise(config.noise, u_base[i, 0], rng)
            idx.append((s, i, j))
            frames.append(u_base[i] + config.mu * u_base[j] + xi)
        frames = np.stack(frames)
        r_new = residual_frames(frames, dt, spec, grid)
        out = []
        for (s, i, j), u_new, r in zip(idx, frames, r_new):
            f_new = f_base[i] + (r - r_base[i])
            prov = {"kind": "hopss", "i": i, "j": j, "seed": seed, "index": s}
            out.append(SolutionPair(Trajectory(u_new, dt, grid, base[i].u.t0), f_new, spec, prov))
        return out

    for chunk in iter_chunks(work, config.count, threads):
        yield from chunk


def generate_hopss_dataset(
    base: list[SolutionPair], config: HopssConfig, seed: int, threads: int = 1
) -> list[SolutionPair]:
    return list(iter_hopss_pairs(base, config, seed, threads))


def hopss_provenance(n_base: int, count: int, seed: int) -> list[dict]:
    """Provenance records of ``iter_hopss_pairs`` without building any sample."""
    out = []
    for s in range(count):
        i, j = draw_pair(n_base, sample_rng(seed, s))
        out.append({"kind": "hopss", "i": i, "j": j, "seed": seed, "index": s})
    return out


def mixup_weights(n_base: int, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal weights normalised to sum to one.

    The last weight absorbs the rounding error of the normalisation so the
    compensated sum is 1 to within one ulp.
    """
    while True:
        raw = rng.standard_normal(n_base)
        total = np.sum(raw)
        if abs(total) >= 1e-12:
            break
    w = raw / total
    if n_base > 1:
        w[-1] = 1.0 - np.sum(w[:-1])
    return w


def mixup_sample(base: list[SolutionPair], rng: np.random.Generator) -> SolutionPair:
    """Weighted combination of every base trajectory and, identically, of their forcings."""
    _check_base(base, 1)
    w = mixup_weights(len(base), rng)
    u = np.tensordot(w, np.stack([p.u.frames for p in base]), axes=1)
    f = np.tensordot(w, np.stack([p.forcing_per_interval() for p in base]), axes=1)
    ref = base[0].u
    return SolutionPair(Trajectory(u, ref.dt, ref.grid, ref.t0), f, base[0].pde, {"kind": "mixup"})


def iter_mixup_pairs(base: list[SolutionPair], count: int, seed: int) -> Iterator[SolutionPair]:
    for s in range(count):
        pair = mixup_sample(base, sample_rng(seed, s))
        pair.provenance = {"kind": "mixup", "seed": seed, "index": s}
        yield pair


def generate_mixup_dataset(base: list[SolutionPair], count: int, seed: int) -> list[SolutionPair]:
    return list(iter_mixup_pairs(base, count, seed))
