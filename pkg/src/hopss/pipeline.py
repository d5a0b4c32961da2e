"""End-to-end generation pipelines and dataset verification.

Three generators share one file format:

* ``tradition``: GRF initial condition and forcing, fine CN integration,
  downsampling to training resolution.  Also produces HOPSS base sets.
* ``hopss``: homologous perturbation of a base set.
* ``mixup``: normalised random combinations of a base set.

Every generator is described by a JSON-able ``generation`` block stored in
the dataset manifest.  For ``hopss`` and ``mixup`` the block nests the
block of the base set, so :func:`regenerate` can rebuild any file from its
manifest alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Iterator

import numpy as np

from .grf import GrfParams, sample_grf
from .hopss import (
    CHUNK,
    HopssConfig,
    SolutionPair,
    hopss_provenance,
    iter_chunks,
    iter_hopss_pairs,
    iter_mixup_pairs,
    residual_frames,
    sample_rng,
)
from .pde import DEFAULT_CAP, PdeSpec, Trajectory, pde_from_dict, solve_batch
from .resample import _spectral_truncate, subsample_field
from .spectral import SpatialGrid
from .store import DatasetManifest, open_dataset, read_dataset, write_dataset

__all__ = [
    "RECIPES",
    "RNG_SCHEME",
    "BaseConfig",
    "recipe",
    "iter_tradition",
    "generate_tradition",
    "tradition_manifest",
    "run_gen_base",
    "run_hopss",
    "run_mixup",
    "regenerate",
    "VerifyReport",
    "verify_dataset",
    "verify_file",
]

RNG_SCHEME = "numpy PCG64 via SeedSequence(seed, spawn_key=(sample_index,))"

_NS_GRF = GrfParams.with_default_sigma(2.0, 2.5, 2).to_dict()

# Fine-solver recipes at full scale.  GRF ``sigma`` is the amplitude: a
# quoted variance of 7**2 becomes sigma = 7.
RECIPES = {
    "ns2d": {
        "pde": {"kind": "ns2d", "nu": 1e-4, "conservative": False},
        "n": 128, "dt": 1e-3, "steps": 10000, "stride": 500, "coarsen": 2,
        "ic": _NS_GRF, "forcing": _NS_GRF,
    },
    "burgers": {
        "pde": {"kind": "burgers", "reynolds": 1000.0},
        "n": 1024, "dt": 5e-3, "steps": 200, "stride": 10, "coarsen": 16,
        "ic": {"tau": 7.0, "alpha": 2.5, "sigma": 7.0},
        "forcing": {"tau": 7.0, "alpha": 2.5, "sigma": 7.0},
    },
    "kdv": {
        "pde": {"kind": "kdv", "lambda_adv": 0.0, "alpha_nl": -0.5, "beta_disp": -1.0},
        "n": 512, "dt": 1e-3, "steps": 10000, "stride": 500, "coarsen": 8,
        "ic": {"tau": 5.0, "alpha": 2.5, "sigma": 1.0},
        "forcing": {"tau": 5.0, "alpha": 2.5, "sigma": 1.0},
    },
}

FORCING_MODES = ("residual", "raw")
SPATIAL_METHODS = ("subsample", "spectral")


def _created_utc() -> str | None:
    """Timestamp from ``SOURCE_DATE_EPOCH`` so that files stay reproducible."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return None
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class BaseConfig:
    """Traditional generation: fine solve, then downsampling.

    ``forcing_mode="residual"`` stores ``f := R(u)`` on the coarse grid (one
    field per interval), so stored pairs satisfy the coarse relation
    exactly; ``"raw"`` stores the subsampled fine forcing instead.
    """

    pde: dict
    n: int
    dt: float
    steps: int
    stride: int
    coarsen: int
    ic: GrfParams | None
    forcing: GrfParams
    count: int = 100
    seed: int = 0
    length: float = 1.0
    forcing_mode: str = "residual"
    spatial_method: str = "subsample"
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        spec = self.spec
        grid = self.fine_grid
        if spec.dims != grid.dims:
            raise ValueError(f"{spec.name} needs dims={spec.dims}")
        if self.steps < 1 or self.stride < 1 or self.steps % self.stride:
            raise ValueError(f"stride {self.stride} must divide steps {self.steps}")
        if self.coarsen < 1 or self.n % self.coarsen or self.n // self.coarsen < 4:
            raise ValueError(f"coarsen factor {self.coarsen} does not divide n={self.n} into >= 4 points")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.count < 0:
            raise ValueError(f"count must be >= 0, got {self.count}")
        if self.forcing_mode not in FORCING_MODES:
            raise ValueError(f"forcing_mode must be one of {FORCING_MODES}")
        if self.spatial_method not in SPATIAL_METHODS:
            raise ValueError(f"spatial_method must be one of {SPATIAL_METHODS}")
        for params in (self.ic, self.forcing):
            if params is not None:
                params.check(grid.dims)

    @property
    def spec(self) -> PdeSpec:
        return pde_from_dict(self.pde)

    @property
    def fine_grid(self) -> SpatialGrid:
        return SpatialGrid(pde_from_dict(self.pde).dims, self.n, self.length)

    @property
    def coarse_grid(self) -> SpatialGrid:
        return SpatialGrid(self.fine_grid.dims, self.n // self.coarsen, self.length)

    @property
    def frames(self) -> int:
        return self.steps // self.stride + 1

    @property
    def dt_coarse(self) -> float:
        return self.dt * self.stride

    def to_dict(self) -> dict:
        return {
            "method": "tradition",
            "pde": dict(self.pde),
            "n": self.n,
            "length": self.length,
            "dt": self.dt,
            "steps": self.steps,
            "stride": self.stride,
            "coarsen": self.coarsen,
            "ic": None if self.ic is None else self.ic.to_dict(),
            "forcing": self.forcing.to_dict(),
            "count": self.count,
            "seed": self.seed,
            "forcing_mode": self.forcing_mode,
            "spatial_method": self.spatial_method,
            "cap": self.cap,
            "rng": RNG_SCHEME,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaseConfig":
        ic = d.get("ic")
        return cls(
            pde=pde_from_dict(d["pde"]).to_dict(),
            n=int(d["n"]),
            dt=float(d["dt"]),
            steps=int(d["steps"]),
            stride=int(d["stride"]),
            coarsen=int(d["coarsen"]),
            ic=None if ic is None else GrfParams.from_dict(ic),
            forcing=GrfParams.from_dict(d["forcing"]),
            count=int(d.get("count", 100)),
            seed=int(d.get("seed", 0)),
            length=float(d.get("length", 1.0)),
            forcing_mode=d.get("forcing_mode", "residual"),
            spatial_method=d.get("spatial_method", "subsample"),
            cap=float(d.get("cap", DEFAULT_CAP)),
        )


def recipe(kind: str, **overrides) -> BaseConfig:
    """Full-scale recipe for ``kind`` with selected fields replaced."""
    if kind not in RECIPES:
        raise ValueError(f"unknown PDE kind {kind!r}; expected one of {sorted(RECIPES)}")
    d = {**RECIPES[kind], "count": 100, "seed": 0}
    d.update({k: v for k, v in overrides.items() if k not in ("ic", "forcing")})
    cfg = BaseConfig.from_dict(d)
    for key in ("ic", "forcing"):
        if key in overrides:
            value = overrides[key]
            if isinstance(value, dict):
                value = GrfParams.from_dict(value)
            cfg = replace(cfg, **{key: value})
    return cfg


def _downsample(values: np.ndarray, cfg: BaseConfig) -> np.ndarray:
    fine, coarse = cfg.fine_grid, cfg.coarse_grid
    if cfg.spatial_method == "spectral" and cfg.coarsen > 1:
        return _spectral_truncate(values, fine, coarse)
    return subsample_field(values, fine, cfg.coarsen)[0]


def _draw_inputs(cfg: BaseConfig, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Initial condition then forcing, both from the sample's own stream."""
    rng = sample_rng(cfg.seed, index)
    grid = cfg.fine_grid
    ic = np.zeros(grid.shape) if cfg.ic is None else sample_grf(grid, cfg.ic, rng)
    return ic, sample_grf(grid, cfg.forcing, rng)


def _tradition_chunk(cfg: BaseConfig, start: int, stop: int) -> list[SolutionPair]:
    spec = cfg.spec
    inputs = [_draw_inputs(cfg, s) for s in range(start, stop)]
    ic = np.stack([a for a, _ in inputs])
    forcing = np.stack([b for _, b in inputs])
    fine = solve_batch(spec, ic, forcing, cfg.steps, cfg.dt, cfg.stride, cfg.fine_grid, cap=cfg.cap)
    coarse = cfg.coarse_grid
    frames = _downsample(fine, cfg)
    if cfg.forcing_mode == "residual":
        f = residual_frames(frames, cfg.dt_coarse, spec, coarse)
    else:
        f = _downsample(forcing, cfg)
    return [
        SolutionPair(
            Trajectory(frames[k], cfg.dt_coarse, coarse),
            f[k],
            spec,
            {"kind": "base", "seed": cfg.seed, "index": s},
        )
        for k, s in enumerate(range(start, stop))
    ]


def iter_tradition(cfg: BaseConfig, threads: int = 1) -> Iterator[SolutionPair]:
    """Lazily solve ``cfg.count`` problems in fixed chunks, in index order."""
    for chunk in iter_chunks(lambda a, b: _tradition_chunk(cfg, a, b), cfg.count, threads):
        yield from chunk


def generate_tradition(cfg: BaseConfig, threads: int = 1) -> list[SolutionPair]:
    return list(iter_tradition(cfg, threads))


def tradition_manifest(cfg: BaseConfig) -> DatasetManifest:
    per_interval = cfg.forcing_mode == "residual"
    return DatasetManifest(
        pde=cfg.spec.to_dict(),
        grid=cfg.coarse_grid.to_dict(),
        dt_coarse=cfg.dt_coarse,
        frames=cfg.frames,
        forcing_frames=cfg.frames - 1 if per_interval else 1,
        sample_count=cfg.count,
        generation=cfg.to_dict(),
        forcing_per_interval=per_interval,
        provenance=[{"kind": "base", "seed": cfg.seed, "index": s} for s in range(cfg.count)],
        created_utc=_created_utc(),
    )


def run_gen_base(cfg: BaseConfig, out, threads: int = 1) -> DatasetManifest:
    manifest = tradition_manifest(cfg)
    write_dataset(iter_tradition(cfg, threads), manifest, out)
    return manifest


def _derived_manifest(base: list[SolutionPair], count: int, generation: dict, provenance: list) -> DatasetManifest:
    ref = base[0]
    return DatasetManifest(
        pde=ref.pde.to_dict(),
        grid=ref.u.grid.to_dict(),
        dt_coarse=ref.u.dt,
        frames=len(ref.u),
        forcing_frames=len(ref.u) - 1,
        sample_count=count,
        generation=generation,
        forcing_per_interval=True,
        provenance=provenance,
        t0=ref.u.t0,
        created_utc=_created_utc(),
    )


def _hopss_write(base, base_generation: dict, config: HopssConfig, seed: int, out, threads: int):
    generation = {
        "method": "hopss",
        "base": base_generation,
        "hopss": config.to_dict(),
        "seed": seed,
        "n_base": len(base),
        "noise_reference": "first frame of u_i",
        "rng": RNG_SCHEME,
    }
    manifest = _derived_manifest(base, config.count, generation, hopss_provenance(len(base), config.count, seed))
    write_dataset(iter_hopss_pairs(base, config, seed, threads), manifest, out)
    return manifest


def _mixup_write(base, base_generation: dict, count: int, seed: int, out):
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    generation = {
        "method": "mixup",
        "base": base_generation,
        "count": count,
        "seed": seed,
        "n_base": len(base),
        "rng": RNG_SCHEME,
    }
    provenance = [{"kind": "mixup", "seed": seed, "index": s} for s in range(count)]
    manifest = _derived_manifest(base, count, generation, provenance)
    write_dataset(iter_mixup_pairs(base, count, seed), manifest, out)
    return manifest


def _load_base(path) -> tuple[list[SolutionPair], DatasetManifest]:
    base, manifest = read_dataset(path)
    if manifest.generation.get("method") != "tradition":
        raise ValueError(f"{path} is a {manifest.generation.get('method')!r} dataset, expected a tradition base set")
    return base, manifest


def run_hopss(base_path, config: HopssConfig, seed: int, out, threads: int = 1) -> DatasetManifest:
    base, base_manifest = _load_base(base_path)
    return _hopss_write(base, base_manifest.generation, config, seed, out, threads)


def run_mixup(base_path, count: int, seed: int, out) -> DatasetManifest:
    base, base_manifest = _load_base(base_path)
    return _mixup_write(base, base_manifest.generation, count, seed, out)


def regenerate(generation: dict, out, threads: int = 1) -> DatasetManifest:
    """Rebuild a dataset from a manifest's ``generation`` block alone."""
    method = generation.get("method")
    if method == "tradition":
        return run_gen_base(BaseConfig.from_dict(generation), out, threads)
    if method not in ("hopss", "mixup"):
        raise ValueError(f"unknown generation method {method!r}")
    base_cfg = BaseConfig.from_dict(generation["base"])
    base = generate_tradition(base_cfg, threads)
    if method == "hopss":
        config = HopssConfig.from_dict(generation["hopss"])
        return _hopss_write(base, base_cfg.to_dict(), config, int(generation["seed"]), out, threads)
    return _mixup_write(base, base_cfg.to_dict(), int(generation["count"]), int(generation["seed"]), out)


@dataclass
class VerifyReport:
    """Per-sample residuals of a dataset.

    ``residual`` is ``max|R(u) - f|``, ``relative`` divides it by ``max|f|``.
    ``consistency`` (HOPSS pairs, base supplied) is
    ``max|[R(u) - f] - [R(u_i) - f_i]|``.  A sample passes when its
    consistency, or its residual when no consistency applies, is within ``tol``.
    """

    tol: float
    residual: np.ndarray
    relative: np.ndarray
    consistency: np.ndarray
    passed: np.ndarray
    kinds: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed))

    @property
    def failures(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(~self.passed)]

    def to_dict(self) -> dict:
        def floats(a):
            return [None if np.isnan(v) else float(v) for v in a]

        return {
            "tol": self.tol,
            "sample_count": int(self.passed.size),
            "passed": int(self.passed.sum()),
            "ok": self.ok,
            "max_residual": float(self.residual.max()) if self.residual.size else 0.0,
            "max_relative": float(self.relative.max()) if self.relative.size else 0.0,
            "max_consistency": float(np.nanmax(self.consistency)) if np.any(~np.isnan(self.consistency)) else None,
            "failures": self.failures,
            "per_sample": {
                "residual": floats(self.residual),
                "relative": floats(self.relative),
                "consistency": floats(self.consistency),
            },
        }


def _batches(pairs: Iterable[SolutionPair], size: int) -> Iterator[list[SolutionPair]]:
    batch = []
    for pair in pairs:
        batch.append(pair)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def _residual_gap(pairs: list[SolutionPair], spec: PdeSpec) -> np.ndarray:
    """``R(u) - f`` per pair, stacked."""
    ref = pairs[0].u
    frames = np.stack([p.u.frames for p in pairs])
    forcing = np.stack([p.forcing_per_interval() for p in pairs])
    return residual_frames(frames, ref.dt, spec, ref.grid) - forcing


def _max_abs(a: np.ndarray) -> np.ndarray:
    return np.abs(a.reshape(a.shape[0], -1)).max(axis=1)


def verify_dataset(
    pairs: Iterable[SolutionPair], spec: PdeSpec, tol: float, base: list[SolutionPair] | None = None
) -> VerifyReport:
    """Residual check of every pair, streamed in chunks.

    With ``base`` given, HOPSS pairs are also compared against the residual
    of the base pair named in their provenance.
    """
    if not tol >= 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    base_gap = None
    if base is not None:
        base_gap = np.concatenate([_residual_gap(b, spec) for b in _batches(base, CHUNK)])
    residual, relative, consistency, kinds = [], [], [], []
    for batch in _batches(pairs, CHUNK):
        if any(p.pde != spec for p in batch):
            raise ValueError("dataset mixes PDE specifications")
        gap = _residual_gap(batch, spec)
        res = _max_abs(gap)
        scale = np.array([np.max(np.abs(p.f)) for p in batch])
        residual.append(res)
        relative.append(res / np.where(scale > 0, scale, 1.0))
        cons = np.full(len(batch), np.nan)
        for k, pair in enumerate(batch):
            kinds.append(pair.provenance.get("kind", "base"))
            if base_gap is not None and pair.provenance.get("kind") == "hopss":
                i = int(pair.provenance["i"])
                if not 0 <= i < len(base_gap):
                    raise ValueError(f"provenance names base pair {i}, base has {len(base_gap)}")
                if base_gap[i].shape != gap[k].shape:
                    raise ValueError("base set does not match the dataset's grid or frame count")
                cons[k] = np.max(np.abs(gap[k] - base_gap[i]))
        consistency.append(cons)
    cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)  # noqa: E731
    residual, relative, consistency = cat(residual), cat(relative), cat(consistency)
    measure = np.where(np.isnan(consistency), residual, consistency)
    return VerifyReport(tol, residual, relative, consistency, measure <= tol, kinds)


def verify_file(path, tol: float, base_path=None) -> VerifyReport:
    manifest, samples = open_dataset(path)
    base = None
    if base_path is not None:
        base, base_manifest = read_dataset(base_path)
        if base_manifest.pde != manifest.pde:
            raise ValueError("base set was generated for a different PDE")
    return verify_dataset(samples, pde_from_dict(manifest.pde), tol, base)
