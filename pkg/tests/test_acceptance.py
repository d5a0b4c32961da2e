"""End-to-end acceptance checks at desk scale.

Each test records one PASS/FAIL line; the lines are printed as the test runs
(visible with ``-s``) and again in the terminal summary.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import small_burgers_config, small_ns_config
from hopss import spectral as sp
from hopss.bench import desk_config, fit_step_scaling, time_hopss, time_tradition, warm_up
from hopss.cli import main
from hopss.hopss import (
    HopssConfig,
    draw_pair,
    generate_mixup_dataset,
    homologous_perturb,
    iter_hopss_pairs,
    rhs_variation,
)
from hopss.noise import NoiseSpec, noise_amplitude, synthesize_noise
from hopss.pde import NS2D, Burgers, KdV, cn_step, solve_trajectory
from hopss.pipeline import generate_tradition, regenerate, run_gen_base, run_hopss, verify_dataset
from hopss.spectral import make_grid
from hopss.store import read_dataset, write_dataset

from oracles import burgers_delta_f

pytestmark = pytest.mark.slow

RESULTS = []

DESK_HOPSS = HopssConfig(mu=1e-3, noise=NoiseSpec("gaussian", 0.0, std=1e-4), count=1000)
DESK_SEED = 7


def record(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def desk():
    """NS desk base (n=64, 21 frames, T=2000, N_b=100) with HOPSS timing at N_new=1000."""
    cfg = desk_config()
    warm_up(cfg, DESK_HOPSS)
    report, base = time_hopss(cfg, DESK_HOPSS, DESK_SEED)
    return cfg, report, base


def test_criterion_1_residual_exactness(desk):
    cfg, timing, base = desk
    t0 = time.perf_counter()
    rep = verify_dataset(iter_hopss_pairs(base, DESK_HOPSS, DESK_SEED), cfg.spec, 1e-12, base=base)
    elapsed = timing.wall_seconds_base + time.perf_counter() - t0
    worst = float(np.max(rep.consistency))
    ok = rep.ok and rep.passed.size == 1000 and not np.isnan(rep.consistency).any() and elapsed < 300
    record(1, ok, f"max consistency {worst:.2e} over {rep.passed.size} pairs (tol 1e-12), runtime {elapsed:.0f} s")
    assert ok


def test_criterion_2_burgers_closed_form():
    t0 = time.perf_counter()
    base = generate_tradition(small_burgers_config(count=10, seed=13))
    assert base[0].u.grid.n == 64
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        i, j = draw_pair(len(base), rng)
        u_i, u_j = base[i].u, base[j].u
        xi = 1e-4 * rng.standard_normal(u_i.grid.shape)
        u_new = homologous_perturb(u_i, u_j, 1e-3, xi)
        delta = rhs_variation(u_new, u_i, base[i].f, base[i].pde) - base[i].f
        oracle = burgers_delta_f(u_new.frames, u_new.frames - u_i.frames, u_i.dt, base[i].pde.reynolds)
        worst = max(worst, float(np.max(np.abs(delta - oracle))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60
    record(2, ok, f"max |df - closed form| {worst:.2e} over 100 triples (tol 1e-10), runtime {elapsed:.1f} s")
    assert ok


def test_criterion_3_speedup(desk):
    t_start = time.perf_counter()
    cfg, hopss_1000, base = desk
    tradition = time_tradition(replace(cfg, seed=cfg.seed + 1), 1000)
    ratio = tradition.wall_seconds_total / hopss_1000.wall_seconds_total
    hopss_5000, _ = time_hopss(cfg, replace(DESK_HOPSS, count=5000), DESK_SEED, base_pairs=base,
                               base_seconds=hopss_1000.wall_seconds_base)
    ratio_5000 = tradition.per_sample_seconds * 5000 / hopss_5000.wall_seconds_total
    budget = time.perf_counter() - t_start + hopss_1000.wall_seconds_total
    ok = ratio >= 3 and ratio_5000 >= 5 and ratio_5000 > ratio and budget < 1800
    record(
        3, ok,
        f"tradition N=1000 {tradition.wall_seconds_total:.0f} s vs HOPSS {hopss_1000.wall_seconds_total:.1f} s "
        f"(base {hopss_1000.wall_seconds_base:.1f} s): {ratio:.1f}x; at 5000 {ratio_5000:.1f}x "
        f"(tradition extrapolated from measured N=1000); runtime {budget:.0f} s",
    )
    assert ok


def test_criterion_4_step_scaling():
    fit = fit_step_scaling(desk_config(), DESK_HOPSS, [500, 1000, 2000, 4000], n_base=24, n_new=128,
                           seed=DESK_SEED, repeats=20, blocks=6)
    ok = abs(fit.hopss_exponent) < 0.05 and 0.8 <= fit.tradition_exponent <= 1.2
    record(
        4, ok,
        f"log-log exponent HOPSS {fit.hopss_exponent:+.3f} (|.| < 0.05), tradition {fit.tradition_exponent:.3f} "
        f"(1 +/- 0.2); per-sample s HOPSS {['%.2e' % t for t in fit.hopss_per_sample]}, "
        f"tradition {['%.2e' % t for t in fit.tradition_per_sample]}",
    )
    assert ok


def _cn_recurrence_error():
    worst = 0.0
    dt = 1e-2
    for spec, grid in ((NS2D(1e-4), make_grid(2, 64)), (Burgers(1000.0), make_grid(1, 64)),
                       (KdV(0.0, -0.5, -1.0), make_grid(1, 64))):
        u0 = np.random.default_rng(5).standard_normal(grid.shape)
        u1 = cn_step(u0, np.zeros(grid.shape), spec, dt, grid, nonlinear=False)
        h0, h1 = sp.forward(u0, grid), sp.forward(u1, grid)
        lam = spec.linear_symbol(grid)
        factor = (1 + dt * lam / 2) / (1 - dt * lam / 2)
        worst = max(worst, float(np.max(np.abs(h1 - factor * h0)) / np.max(np.abs(h0))))
    return worst


def _burgers_convergence():
    g = make_grid(1, 128)
    rng = np.random.default_rng(1)
    spec = np.zeros(g.spectral_shape, dtype=complex)
    spec[1:4] = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    ic = sp.inverse(spec, g)
    ic = 0.5 * ic / np.max(np.abs(ic))
    finals = [solve_trajectory(Burgers(1000.0), ic, np.zeros(128), s, 0.5 / s, s, g).frames[-1] for s in (100, 200, 400)]
    return np.max(np.abs(finals[0] - finals[1])) / np.max(np.abs(finals[1] - finals[2]))


def _ns_divergence(base):
    g = base[0].u.grid
    worst = 0.0
    for pair in base[:10]:
        for w in pair.u.frames:
            vx, vy = sp.velocity_from_vorticity(w, g)
            div = sp.spectral_derivative(vx, g, 1, 0) + sp.spectral_derivative(vy, g, 1, 1)
            worst = max(worst, float(np.max(np.abs(div))))
    return worst


def test_criterion_5_solver(desk):
    _, _, base = desk
    rec = _cn_recurrence_error()
    factor = _burgers_convergence()
    div = _ns_divergence(base)
    ok = rec <= 1e-12 and factor >= 1.8 and div <= 1e-10
    record(5, ok, f"(a) CN recurrence {rec:.1e} (1e-12); (b) Burgers factor {factor:.2f} (>= 1.8); "
                  f"(c) NS divergence {div:.1e} (1e-10)")
    assert ok


def test_criterion_6_noise():
    rng = np.random.default_rng(6)
    ref = rng.uniform(-3, 3, 64)
    peak_err = 0.0
    for kind in ("multi_sine", "perlin", "random_walk"):
        for eps in (1e-4, 1e-3, 1e-1):
            eta = synthesize_noise(NoiseSpec(kind, eps), ref, rng)
            peak_err = max(peak_err, abs(np.max(np.abs(eta)) - noise_amplitude(eps, ref)))
    walk_mean = max(abs(synthesize_noise(NoiseSpec("random_walk", 1e-3), ref, rng).mean()) for _ in range(50))
    ref2 = rng.uniform(-2, 2, (100, 100))
    amp = noise_amplitude(1e-3, ref2)
    std_err = abs(synthesize_noise(NoiseSpec("gaussian", 1e-3), ref2, rng).std() / amp - 1)
    floors = [np.max(np.abs(synthesize_noise(NoiseSpec(k, 1e-3), np.zeros(32), rng)))
              for k in ("multi_sine", "perlin", "random_walk")]
    floor_ok = all(abs(a - 1e-8) <= 1e-20 for a in floors) and noise_amplitude(1e-3, np.zeros(8)) == 1e-8
    ok = peak_err <= 1e-12 and walk_mean <= 1e-15 and std_err <= 0.05 and floor_ok
    record(6, ok, f"peak error {peak_err:.1e}; walk mean {walk_mean:.1e}; gaussian std off by {100 * std_err:.2f}%; "
                  f"zero-reference floor {'ok' if floor_ok else 'wrong'}")
    assert ok


def test_criterion_7_mixup_vs_hopss(desk):
    cfg, _, base = desk
    mix = generate_mixup_dataset(base, 1000, seed=11)
    rep_mix = verify_dataset(mix, cfg.spec, 1e-8)
    bad_fraction = float(np.mean(rep_mix.relative > 1e-2))
    rep_hopss = verify_dataset(iter_hopss_pairs(base, DESK_HOPSS, DESK_SEED), cfg.spec, 1e-8)
    ok = bad_fraction >= 0.95 and rep_hopss.ok and rep_hopss.passed.size == 1000
    record(7, ok, f"mixup pairs with relative residual > 1e-2: {100 * bad_fraction:.1f}% (>= 95%); "
                  f"HOPSS pass at 1e-8: {int(rep_hopss.passed.sum())}/1000 "
                  f"(max residual {rep_hopss.residual.max():.1e})")
    assert ok


def test_criterion_8_determinism(tmp_path):
    base_path = tmp_path / "base.hds"
    run_gen_base(small_ns_config(count=20, seed=4), base_path)
    new_path = tmp_path / "new.hds"
    run_hopss(base_path, replace(DESK_HOPSS, count=100), 3, new_path)

    regen_ok = True
    for path in (base_path, new_path):
        _, manifest = read_dataset(path)
        regenerate(manifest.generation, tmp_path / "re.hds")
        regen_ok &= (tmp_path / "re.hds").read_bytes() == path.read_bytes()

    pairs, manifest = read_dataset(new_path)
    write_dataset(pairs, manifest, tmp_path / "copy.hds")
    again, _ = read_dataset(tmp_path / "copy.hds")
    round_trip_ok = (tmp_path / "copy.hds").read_bytes() == new_path.read_bytes() and all(
        np.array_equal(a.u.frames, b.u.frames) and np.array_equal(a.f, b.f) for a, b in zip(pairs, again)
    )

    outputs = {}
    for threads in ("1", "8"):
        b = tmp_path / f"b{threads}.hds"
        h = tmp_path / f"h{threads}.hds"
        rc = main(["gen-base", "--pde", "ns2d", "--n", "32", "--steps", "200", "--stride", "10", "--coarsen", "1",
                   "--count", "40", "--seed", "1", "--threads", threads, "--out", str(b)])
        rc |= main(["hopss", "--base", str(b), "--count", "200", "--seed", "2", "--threads", threads, "--out", str(h)])
        assert rc == 0
        outputs[threads] = (b.read_bytes(), h.read_bytes())
    threads_ok = outputs["1"] == outputs["8"]

    ok = regen_ok and round_trip_ok and threads_ok
    record(8, ok, f"regenerate byte-identical {regen_ok}; round trip bit-exact {round_trip_ok}; "
                  f"threads 1 vs 8 byte-identical {threads_ok}")
    assert ok
