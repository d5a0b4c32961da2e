import json

import numpy as np
import pytest

from hopss.bench import (
    BenchConfig,
    BenchReport,
    TimingReport,
    desk_config,
    fit_step_scaling,
    log_log_slope,
    run_benchmark,
    time_hopss,
    time_tradition,
)
from hopss.hopss import HopssConfig


def timing(method, per_sample, base=0.0, count=10):
    return TimingReport(method, count, 100, 21, 64, 64, base + per_sample * count, base, per_sample * count, per_sample)


class TestSlope:
    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 2.0])
    def test_power_law(self, p):
        x = np.array([500, 1000, 2000, 4000])
        assert log_log_slope(x, 3.0 * x**p) == pytest.approx(p, abs=1e-12)


class TestReport:
    def test_projected_speedup_grows_with_count(self):
        report = BenchReport(timing("tradition", 1.0), timing("hopss", 1e-3, base=50.0), 0.0)
        values = [report.projected_speedup(n) for n in (100, 1000, 5000, 20000)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert report.projected_speedup(1000) == pytest.approx(1000 / 51.0)

    def test_json(self):
        report = BenchReport(timing("tradition", 1.0), timing("hopss", 1e-3), 2.0)
        d = json.loads(report.to_json())
        assert d["speedup"] == 2.0 and d["scaling"] is None and "hardware" in d["note"]


class TestTiming:
    def test_desk_config(self):
        cfg = desk_config()
        assert (cfg.n, cfg.coarse_grid.n, cfg.frames, cfg.count) == (64, 64, 21, 100)
        assert desk_config(steps=4000).stride == 200

    def test_tradition_extrapolates(self):
        cfg = desk_config(steps=40, count=2)
        rep = time_tradition(cfg, 10, measure=2)
        assert rep.extrapolated and rep.measured_samples == 2
        assert rep.wall_seconds_total == pytest.approx(rep.per_sample_seconds * 10)

    def test_hopss_reuses_base(self):
        cfg = desk_config(steps=40, count=3)
        rep, base = time_hopss(cfg, HopssConfig(count=8), seed=1)
        assert len(base) == 3 and rep.sample_count == 8
        again, same = time_hopss(cfg, HopssConfig(count=4), seed=1, base_pairs=base, base_seconds=rep.wall_seconds_base)
        assert same is base and again.wall_seconds_base == rep.wall_seconds_base

    def test_scaling_rejects_uneven_steps(self):
        with pytest.raises(ValueError):
            fit_step_scaling(desk_config(steps=40, count=2), HopssConfig(count=2), [50], 2, 2)

    def test_scaling_rejects_bad_blocks(self):
        with pytest.raises(ValueError):
            fit_step_scaling(desk_config(steps=40, count=2), HopssConfig(count=2), [20], 2, 2, blocks=3)

    def test_scaling_blocks(self):
        fit = fit_step_scaling(desk_config(steps=40, count=2), HopssConfig(count=2), [20, 40], 4, 3,
                               repeats=2, blocks=2)
        assert len(fit.tradition_per_sample) == 2 and all(t > 0 for t in fit.hopss_per_sample)

    def test_small_run(self):
        config = BenchConfig(base=desk_config(steps=40, count=2), hopss=HopssConfig(count=8), tradition_count=4,
                             scaling_steps=(20, 40), scaling_base=2, scaling_new=4)
        report = run_benchmark(config)
        assert report.speedup > 0
        assert report.scaling.steps == [20, 40]
        assert BenchConfig.from_dict(config.to_dict()) == config
