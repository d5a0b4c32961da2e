"""Wall-clock comparison of traditional and HOPSS generation.

Absolute seconds depend on the machine; the quantities worth comparing
across machines are the speedup ratio and how each method's per-sample cost
scales with the fine step count ``T``.  Traditional cost grows linearly in
``T``, while the HOPSS generation stage only touches coarse frames and should
not depend on ``T`` at all.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .hopss import HopssConfig, iter_hopss_pairs
from .pipeline import BaseConfig, generate_tradition, iter_tradition, recipe
from .store import canonical_json

__all__ = [
    "TimingReport",
    "ScalingFit",
    "BenchConfig",
    "BenchReport",
    "desk_config",
    "warm_up",
    "time_tradition",
    "time_hopss",
    "fit_step_scaling",
    "run_benchmark",
]

HARDWARE_NOTE = "absolute seconds are hardware-bound; compare ratios and scaling exponents"


@dataclass
class TimingReport:
    method: str
    sample_count: int
    fine_steps: int
    coarse_frames: int
    grid_n: int
    grid_n_coarse: int
    wall_seconds_total: float
    wall_seconds_base: float
    wall_seconds_generation: float
    per_sample_seconds: float
    measured_samples: int = 0
    extrapolated: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScalingFit:
    """Per-sample cost against ``T`` and the fitted exponents ``d log t / d log T``."""

    steps: list
    tradition_per_sample: list
    hopss_per_sample: list
    tradition_exponent: float
    hopss_exponent: float

    def to_dict(self) -> dict:
        return asdict(self)


def log_log_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class BenchConfig:
    """``base.count`` is N_b, ``hopss.count`` is N_new, ``tradition_count`` is N.

    ``tradition_measure`` caps how many traditional samples are actually
    solved; the total for ``tradition_count`` is then extrapolated linearly.
    """

    base: BaseConfig
    hopss: HopssConfig = field(default_factory=HopssConfig)
    tradition_count: int = 1000
    tradition_measure: int | None = None
    seed: int = 7
    repeats: int = 1
    threads: int = 1
    scaling_steps: tuple = ()
    scaling_base: int = 16
    scaling_new: int = 256

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "hopss": self.hopss.to_dict(),
            "tradition_count": self.tradition_count,
            "tradition_measure": self.tradition_measure,
            "seed": self.seed,
            "repeats": self.repeats,
            "threads": self.threads,
            "scaling_steps": list(self.scaling_steps),
            "scaling_base": self.scaling_base,
            "scaling_new": self.scaling_new,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        measure = d.get("tradition_measure")
        hopss = HopssConfig.from_dict(d["hopss"]) if "hopss" in d else HopssConfig()
        return cls(
            base=BaseConfig.from_dict(d["base"]) if "base" in d else desk_config(),
            hopss=hopss,
            tradition_count=int(d.get("tradition_count", 1000)),
            tradition_measure=None if measure is None else int(measure),
            seed=int(d.get("seed", 7)),
            repeats=int(d.get("repeats", 1)),
            threads=int(d.get("threads", 1)),
            scaling_steps=tuple(int(t) for t in d.get("scaling_steps", ())),
            scaling_base=int(d.get("scaling_base", 16)),
            scaling_new=int(d.get("scaling_new", 256)),
        )


def desk_config(steps: int = 2000, count: int = 100, seed: int = 42) -> BaseConfig:
    """NS base recipe shrunk to a 64x64 fine grid; 21 coarse frames at any ``steps``."""
    return recipe("ns2d", n=64, steps=steps, stride=steps // 20, coarsen=1, count=count, seed=seed)


def warm_up(base: BaseConfig, hopss: HopssConfig) -> None:
    """Populate symbol caches and FFT plans on a throwaway instance."""
    small = replace(base, count=2, steps=base.stride * 2, seed=base.seed + 1)
    pairs = generate_tradition(small)
    for _ in iter_hopss_pairs(pairs, replace(hopss, count=2), seed=0):
        pass


def time_tradition(cfg: BaseConfig, count: int, measure: int | None = None, threads: int = 1) -> TimingReport:
    measured = count if measure is None else min(count, measure)
    t0 = time.perf_counter()
    for _ in iter_tradition(replace(cfg, count=measured), threads):
        pass
    wall = time.perf_counter() - t0
    per_sample = wall / measured
    total = per_sample * count
    return TimingReport(
        "tradition", count, cfg.steps, cfg.frames, cfg.n, cfg.coarse_grid.n,
        total, 0.0, total, per_sample, measured, measured < count,
    )


def _time_generation(base_pairs, hopss: HopssConfig, seed: int, repeats: int, threads: int) -> float:
    best = np.inf
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        for _ in iter_hopss_pairs(base_pairs, hopss, seed, threads):
            pass
        best = min(best, time.perf_counter() - t0)
    return float(best)


def time_hopss(
    cfg: BaseConfig, hopss: HopssConfig, seed: int, repeats: int = 1, threads: int = 1, base_pairs=None,
    base_seconds: float | None = None,
) -> tuple[TimingReport, list]:
    """Time both HOPSS stages; returns the report and the base pairs.

    Pass ``base_pairs`` with their measured ``base_seconds`` to reuse a base
    set across several generation sizes.
    """
    if base_pairs is None:
        t0 = time.perf_counter()
        base_pairs = generate_tradition(cfg, threads)
        base_seconds = time.perf_counter() - t0
    gen = _time_generation(base_pairs, hopss, seed, repeats, threads)
    report = TimingReport(
        "hopss", hopss.count, cfg.steps, cfg.frames, cfg.n, cfg.coarse_grid.n,
        base_seconds + gen, base_seconds, gen, gen / hopss.count, hopss.count, False,
    )
    return report, base_pairs


def fit_step_scaling(cfg: BaseConfig, hopss: HopssConfig, steps, n_base: int, n_new: int, seed: int = 7,
                     repeats: int = 3, threads: int = 1, blocks: int = 1) -> ScalingFit:
    """Per-sample cost of both methods at each fine step count, coarse frames held fixed.

    Timings are interleaved over the step counts so that machine drift hits
    every point alike, and the fastest round is kept: the base set is solved
    in ``blocks`` blocks, generation is repeated ``repeats`` times.
    """
    intervals = cfg.frames - 1
    for t in steps:
        if t % intervals:
            raise ValueError(f"fine step count {t} is not a multiple of {intervals} coarse intervals")
    if not 1 <= blocks <= n_base:
        raise ValueError(f"blocks must lie in [1, n_base], got {blocks}")
    warm_up(cfg, hopss)
    configs = [replace(cfg, steps=int(t), stride=int(t) // intervals) for t in steps]
    bounds = np.linspace(0, n_base, blocks + 1).astype(int)
    bases = [[] for _ in steps]
    trad = [np.inf] * len(steps)
    for b in range(blocks):
        size = bounds[b + 1] - bounds[b]
        for k, cfg_t in enumerate(configs):
            t0 = time.perf_counter()
            bases[k] += generate_tradition(replace(cfg_t, count=int(size), seed=cfg.seed + b), threads)
            trad[k] = min(trad[k], (time.perf_counter() - t0) / size)
    config = replace(hopss, count=n_new)
    best = [np.inf] * len(steps)
    for _ in range(max(1, repeats)):
        for k, base in enumerate(bases):
            best[k] = min(best[k], _time_generation(base, config, seed, 1, threads))
    gen = [b / n_new for b in best]
    return ScalingFit(
        [int(t) for t in steps], trad, gen, log_log_slope(steps, trad), log_log_slope(steps, gen)
    )


@dataclass
class BenchReport:
    tradition: TimingReport
    hopss: TimingReport
    speedup: float
    scaling: ScalingFit | None = None
    note: str = HARDWARE_NOTE

    def projected_speedup(self, n_new: int) -> float:
        """Speedup at ``n_new`` samples from the measured per-sample costs."""
        trad = self.tradition.per_sample_seconds * n_new
        return trad / (self.hopss.wall_seconds_base + self.hopss.per_sample_seconds * n_new)

    def to_dict(self) -> dict:
        return {
            "tradition": self.tradition.to_dict(),
            "hopss": self.hopss.to_dict(),
            "speedup": self.speedup,
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
            "note": self.note,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def run_benchmark(config: BenchConfig) -> BenchReport:
    """Traditional vs HOPSS at matched sample counts (``tradition_count`` vs ``hopss.count``)."""
    warm_up(config.base, config.hopss)
    hopss, _ = time_hopss(config.base, config.hopss, config.seed, config.repeats, config.threads)
    trad_cfg = replace(config.base, seed=config.base.seed + 1)
    tradition = time_tradition(trad_cfg, config.tradition_count, config.tradition_measure, config.threads)
    scaling = None
    if config.scaling_steps:
        scaling = fit_step_scaling(
            config.base, config.hopss, config.scaling_steps, config.scaling_base, config.scaling_new,
            config.seed, max(config.repeats, 3), config.threads,
        )
    return BenchReport(tradition, hopss, tradition.wall_seconds_total / hopss.wall_seconds_total, scaling)
