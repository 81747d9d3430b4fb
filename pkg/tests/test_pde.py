import math

import numpy as np
import pytest

from bandsolve import (BenchConfig, FieldBatch, InterleavedBatch, Problem, StorageVariant, Variant,
                       amplification_factor, diffusion_lhs, diffusion_rhs, hyper_lhs, hyper_rhs,
                       read_ibat, run_benchmark, sine_modes)
from bandsolve.pde import grid, mode_amplitude, storage_variant

TRI_AND_PENT = [
    (Problem.DIFFUSION, Variant.SHARED),
    (Problem.DIFFUSION, Variant.PER_SYSTEM),
    (Problem.HYPERDIFFUSION, Variant.SHARED),
    (Problem.HYPERDIFFUSION, Variant.PER_SYSTEM),
    (Problem.HYPERDIFFUSION, Variant.UNIFORM),
]


def _theta(k, n):
    return 2 * math.pi * k / n


class TestCoefficients:
    def test_diffusion(self):
        assert diffusion_lhs(0.5) == (-0.5, 2.0, -0.5)
        assert diffusion_lhs(0.0) == (0.0, 1.0, 0.0)

    def test_hyper(self):
        assert hyper_lhs(0.25) == (0.25, -1.0, 2.5, -1.0, 0.25)
        assert hyper_lhs(0.0) == (0.0, 0.0, 1.0, 0.0, 0.0)

    @pytest.mark.parametrize("sigma", [1e-3, 0.5, 7.0, 1e4])
    def test_row_sums(self, sigma):
        assert sum(diffusion_lhs(sigma)) == pytest.approx(1.0, rel=1e-15, abs=1e-12)
        assert sum(hyper_lhs(sigma)) == pytest.approx(1.0, rel=1e-15, abs=1e-10)


class TestRhs:
    @pytest.mark.parametrize("rhs", [diffusion_rhs, hyper_rhs])
    def test_constant_field(self, rhs):
        state = InterleavedBatch.from_rows(np.ones((16, 3)))
        np.testing.assert_allclose(rhs(state, 0.3).view(), 1.0, rtol=1e-15)

    @pytest.mark.parametrize("rhs", [diffusion_rhs, hyper_rhs])
    def test_zero_sigma(self, rhs, rng):
        state = InterleavedBatch(rng.standard_normal(24), 8, 3)
        assert rhs(state, 0.0).data.tobytes() == state.data.tobytes()

    def test_diffusion_symbol(self):
        n, sigma = 64, 0.5
        c = np.sin(2 * np.pi * grid(n))
        out = diffusion_rhs(InterleavedBatch.from_rows(c[:, None]), sigma).view()[:, 0]
        expected = (1 - 2 * sigma * (1 - math.cos(2 * math.pi / n))) * c
        np.testing.assert_allclose(out, expected, atol=1e-14)

    @pytest.mark.parametrize("k", [1, 3, 10])
    def test_hyper_symbol(self, k):
        n, sigma = 48, 0.7
        theta = _theta(k, n)
        c = np.sin(2 * np.pi * k * grid(n))
        out = hyper_rhs(InterleavedBatch.from_rows(c[:, None]), sigma).view()[:, 0]
        q = 6 - 8 * math.cos(theta) + 2 * math.cos(2 * theta)
        np.testing.assert_allclose(out, (1 - sigma * q) * c, atol=1e-13)

    def test_matches_explicit_roll(self, rng):
        c = rng.standard_normal((10, 4))
        s = 0.3
        expected = (-s * np.roll(c, 2, 0) + 4 * s * np.roll(c, 1, 0) + (1 - 6 * s) * c
                    + 4 * s * np.roll(c, -1, 0) - s * np.roll(c, -2, 0))
        out = hyper_rhs(InterleavedBatch.from_rows(c), s).view()
        np.testing.assert_allclose(out, expected, rtol=1e-14, atol=1e-14)

    def test_out_shape_checked(self):
        with pytest.raises(ValueError):
            diffusion_rhs(InterleavedBatch.zeros(4, 2), 0.1, out=InterleavedBatch.zeros(4, 3))


class TestAmplification:
    @pytest.mark.parametrize("problem", list(Problem))
    def test_mean_mode(self, problem):
        assert amplification_factor(problem, 3.0, 0.0) == 1.0

    def test_diffusion_nyquist(self):
        assert amplification_factor("diffusion", 0.5, math.pi) == pytest.approx(-1 / 3, rel=1e-15)

    @pytest.mark.parametrize("problem", list(Problem))
    @pytest.mark.parametrize("sigma", [0.01, 0.5, 10.0, 1000.0])
    def test_bounded(self, problem, sigma):
        for theta in np.linspace(0, math.pi, 101):
            assert abs(amplification_factor(problem, sigma, theta)) <= 1.0


class TestConfig:
    def test_default_sigma_is_one(self):
        assert BenchConfig(n=64, m=2).sigma_x == pytest.approx(1.0, rel=1e-14)
        cfg = BenchConfig(n=32, m=2, problem="hyperdiffusion")
        assert cfg.sigma_x == pytest.approx(1.0, rel=1e-14)
        assert cfg.dx == 1 / 32

    def test_with_sigma(self):
        cfg = BenchConfig.with_sigma(0.25, n=16, m=1, problem=Problem.HYPERDIFFUSION)
        assert cfg.sigma_x == pytest.approx(0.25, rel=1e-14)

    @pytest.mark.parametrize("kwargs", [
        dict(n=2, m=1),
        dict(n=5, m=1, problem="hyperdiffusion"),
        dict(n=8, m=0),
        dict(n=8, m=1, steps=0),
        dict(n=8, m=1, dt=-1.0),
        dict(n=8, m=1, variant="uniform"),
        dict(n=8, m=1, dump_every=2),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            BenchConfig(**kwargs)

    def test_storage_variants(self):
        assert storage_variant("diffusion", "persystem") is StorageVariant.TRI_PER_SYSTEM
        assert storage_variant("hyperdiffusion", "uniform") is StorageVariant.PENT_UNIFORM


class TestInitialData:
    def test_default_wavenumbers(self):
        fb = sine_modes(16, 6)
        np.testing.assert_allclose(mode_amplitude(fb.state, [1, 2, 3, 4, 1, 2]), 1.0, rtol=1e-13)

    def test_wrong_wavenumber_count(self):
        with pytest.raises(ValueError):
            sine_modes(8, 3, [1, 2])


class TestRunBenchmark:
    def test_one_step_diffusion_mode(self):
        n = 64
        cfg = BenchConfig(n=n, m=1, steps=1)
        final, _ = run_benchmark(cfg, sine_modes(n, 1, [1]))
        ratio = mode_amplitude(final.state, 1)[0]
        assert ratio == pytest.approx(amplification_factor("diffusion", cfg.sigma_x,
                                                           _theta(1, n)), rel=0, abs=1e-10)

    def test_thousand_steps_hyper_mode(self):
        n, k = 128, 3
        cfg = BenchConfig.with_sigma(0.05, n=n, m=1, steps=1000, problem="hyperdiffusion")
        final, report = run_benchmark(cfg, sine_modes(n, 1, [k]))
        expected = amplification_factor("hyperdiffusion", cfg.sigma_x, _theta(k, n)) ** 1000
        assert mode_amplitude(final.state, k)[0] == pytest.approx(expected, rel=1e-8)
        assert report.steps == 1000 and final.time_index == 1000

    @pytest.mark.parametrize("problem, variant", TRI_AND_PENT)
    @pytest.mark.parametrize("sigma", [0.01, 0.5, 10.0, 1000.0])
    def test_mode_decay_per_step(self, problem, variant, sigma):
        n, ks = 32, [1, 2, 5, 7]
        cfg = BenchConfig.with_sigma(sigma, n=n, m=4, steps=1, problem=problem, variant=variant)
        state = sine_modes(n, 4, ks)
        for _ in range(3):
            before = np.array([mode_amplitude(state.state, k)[j] for j, k in enumerate(ks)])
            state, _ = run_benchmark(cfg, state)
            after = np.array([mode_amplitude(state.state, k)[j] for j, k in enumerate(ks)])
            G = np.array([amplification_factor(problem, sigma, _theta(k, n)) for k in ks])
            np.testing.assert_allclose(after, G * before, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("problem, variant", TRI_AND_PENT)
    @pytest.mark.parametrize("sigma", [0.01, 0.5, 10.0, 1000.0])
    def test_stability_and_mass(self, problem, variant, sigma):
        n = 24
        cfg = BenchConfig.with_sigma(sigma, n=n, m=3, steps=1, problem=problem, variant=variant)
        state = sine_modes(n, 3, [1, 4, 11], offset=0.75)
        for _ in range(10):
            mean0 = state.state.view().mean(axis=0)
            state, _ = run_benchmark(cfg, state)
            np.testing.assert_allclose(state.state.view().mean(axis=0), mean0, rtol=1e-12)
        state = sine_modes(n, 3, [1, 4, 11])
        prev = np.abs(state.state.view()).max(axis=0)
        for _ in range(10):
            state, _ = run_benchmark(cfg, state)
            amp = np.abs(state.state.view()).max(axis=0)
            assert (amp <= prev * (1 + 1e-12)).all()
            prev = amp

    @pytest.mark.parametrize("problem", list(Problem))
    def test_batch_independence(self, problem):
        n, ks = 32, [1, 3, 6]
        cfg = BenchConfig(n=n, m=3, steps=20, problem=problem)
        together, _ = run_benchmark(cfg, sine_modes(n, 3, ks))
        for j, k in enumerate(ks):
            single_cfg = BenchConfig(n=n, m=1, steps=20, problem=problem)
            alone, _ = run_benchmark(single_cfg, sine_modes(n, 1, [k]))
            assert together.state.column(j).tobytes() == alone.state.column(0).tobytes()

    @pytest.mark.parametrize("problem, variants", [
        (Problem.DIFFUSION, [Variant.PER_SYSTEM]),
        (Problem.HYPERDIFFUSION, [Variant.PER_SYSTEM, Variant.UNIFORM]),
    ])
    def test_variants_agree(self, rng, problem, variants):
        n, m = 40, 5
        init = FieldBatch(InterleavedBatch(rng.standard_normal(n * m), n, m))
        ref, _ = run_benchmark(BenchConfig(n=n, m=m, steps=50, problem=problem), init)
        for v in variants:
            out, _ = run_benchmark(BenchConfig(n=n, m=m, steps=50, problem=problem, variant=v),
                                   init)
            assert np.abs(out.state.data - ref.state.data).max() <= 1e-12

    def test_initial_not_modified(self, rng):
        init = FieldBatch(InterleavedBatch(rng.standard_normal(30), 10, 3))
        snap = init.state.data.copy()
        run_benchmark(BenchConfig(n=10, m=3, steps=3), init, warmup=True)
        assert init.state.data.tobytes() == snap.tobytes()

    def test_warmup_does_not_change_result(self):
        init = sine_modes(16, 2)
        a, _ = run_benchmark(BenchConfig(n=16, m=2, steps=4), init)
        b, _ = run_benchmark(BenchConfig(n=16, m=2, steps=4), init, warmup=True)
        assert a.state.data.tobytes() == b.state.data.tobytes()

    def test_report_fields(self):
        _, rep = run_benchmark(BenchConfig(n=16, m=4, steps=5, problem="hyperdiffusion",
                                           variant="uniform"), sine_modes(16, 4), workers=2)
        assert rep.threads == 2 and rep.steps == 5
        assert rep.wall_seconds_total >= 0 and rep.seconds_per_step_stddev >= 0
        assert rep.seconds_per_step_mean == pytest.approx(rep.wall_seconds_total / 5)
        assert rep.footprint.element_count == 4 * 16 + 16 * 4
        assert rep.step_seconds.shape == (5,)

    @pytest.mark.parametrize("problem, variant", TRI_AND_PENT)
    def test_timed_loop_does_not_allocate(self, problem, variant):
        cfg = BenchConfig(n=64, m=64, steps=5, problem=problem, variant=variant)
        run_benchmark(cfg, sine_modes(64, 64), check_allocations=True)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            run_benchmark(BenchConfig(n=16, m=2, steps=1), sine_modes(16, 3))

    def test_dumps(self, tmp_path):
        prefix = str(tmp_path / "field_")
        cfg = BenchConfig(n=12, m=2, steps=6, dump_every=3, dump_prefix=prefix)
        final, _ = run_benchmark(cfg, sine_modes(12, 2))
        files = sorted(p.name for p in tmp_path.iterdir())
        assert files == ["field_00000003.ibat", "field_00000006.ibat"]
        assert read_ibat(tmp_path / files[-1]).data.tobytes() == final.state.data.tobytes()
