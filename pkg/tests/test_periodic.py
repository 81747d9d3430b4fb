import numpy as np
import pytest

from bandsolve import (DivisionByZero, InterleavedBatch, ShapeMismatch, SingularCorrection,
                       dense_solve_oracle, periodic_pent_prepare, periodic_pent_solve_batch,
                       periodic_tri_prepare, periodic_tri_solve_batch)
from bandsolve import periodic
from bandsolve.pde import diffusion_lhs, hyper_lhs
from helpers import random_dominant_constants, rel_err


def _tri(corr, d, workers=None):
    batch = InterleavedBatch.from_rows(d)
    periodic_tri_solve_batch(corr, batch, workers=workers)
    return batch.view().copy()


def _pent(corr, d, workers=None):
    batch = InterleavedBatch.from_rows(d)
    periodic_pent_solve_batch(corr, batch, workers=workers)
    return batch.view().copy()


class TestTriSplitting:
    @pytest.mark.parametrize("n", [3, 4, 8, 32])
    def test_identity_exact(self, rng, n):
        corr = periodic_tri_prepare(*random_dominant_constants(rng, 3), n)
        rebuilt = corr.lhs.to_dense() + np.outer(corr.u(), corr.v())
        assert np.abs(rebuilt - corr.cyclic_dense()).max() <= 4 * np.finfo(float).eps

    def test_modified_matrix_shape(self):
        a, b, c = 0.3, -2.0, 0.7
        corr = periodic_tri_prepare(a, b, c, 6)
        A = corr.lhs.to_dense()
        assert A[0, -1] == 0.0 and A[-1, 0] == 0.0
        assert A[0, 0] == 2 * b
        assert A[-1, -1] == b + a * c / b
        assert (corr.v_first, corr.v_last) == (1.0, -a / b)

    def test_z_solves_correction_system(self, rng):
        corr = periodic_tri_prepare(*random_dominant_constants(rng, 3), 10)
        np.testing.assert_allclose(corr.lhs.to_dense() @ corr.z, corr.u(), atol=1e-14)
        assert corr.denom == pytest.approx(1 + corr.v() @ corr.z, rel=1e-15)

    def test_pure_diagonal_wrap(self):
        # A'(1,1) = 2b, so z_1 = -1/2 and the denominator is 1/2, not 0
        corr = periodic_tri_prepare(0.0, 1.0, 0.0, 5)
        np.testing.assert_array_equal(corr.z, [-0.5, 0, 0, 0, 0])
        assert corr.denom == 0.5
        d = np.arange(1.0, 6.0)[:, None]
        assert _tri(corr, d).tobytes() == d.tobytes()

    def test_zero_diagonal(self):
        with pytest.raises(DivisionByZero):
            periodic_tri_prepare(1.0, 0.0, 1.0, 5)

    def test_singular_correction(self):
        # a = c = -b/2 makes the cyclic matrix singular (rows sum to 0)
        with pytest.raises(SingularCorrection):
            periodic_tri_prepare(-1.0, 2.0, -1.0, 6)

    def test_too_small(self):
        with pytest.raises(ShapeMismatch):
            periodic_tri_prepare(0.1, 1.0, 0.1, 2)


class TestTriSolve:
    @pytest.mark.parametrize("sigma, n", [(0.5, 8), (0.1, 16)])
    def test_diffusion_against_cyclic_oracle(self, rng, sigma, n):
        corr = periodic_tri_prepare(*diffusion_lhs(sigma), n)
        d = rng.standard_normal((n, 3))
        assert rel_err(_tri(corr, d), dense_solve_oracle(corr.cyclic_dense(), d)) <= 1e-10

    def test_zero_rhs(self):
        corr = periodic_tri_prepare(*diffusion_lhs(0.5), 9)
        np.testing.assert_array_equal(_tri(corr, np.zeros((9, 2))), 0.0)

    @pytest.mark.parametrize("sigma", [0.5, 3.0])
    def test_constant_rhs(self, sigma):
        a, b, c = diffusion_lhs(sigma)
        corr = periodic_tri_prepare(a, b, c, 10)
        np.testing.assert_allclose(_tri(corr, np.ones((10, 2))), 1 / (a + b + c), rtol=1e-13)

    def test_random_batch(self, rng):
        corr = periodic_tri_prepare(*random_dominant_constants(rng, 3), 12)
        d = rng.standard_normal((12, 6))
        assert rel_err(_tri(corr, d), dense_solve_oracle(corr.cyclic_dense(), d)) <= 1e-9

    def test_shape_mismatch(self):
        corr = periodic_tri_prepare(*diffusion_lhs(0.5), 8)
        with pytest.raises(ShapeMismatch):
            periodic_tri_solve_batch(corr, InterleavedBatch.zeros(7, 1))

    def test_one_banded_solve_per_call(self, monkeypatch):
        calls = []
        real = periodic.tri_solve_shared_batch

        def spy(factor, batch, **kw):
            calls.append(batch.m)
            real(factor, batch, **kw)

        monkeypatch.setattr(periodic, "tri_solve_shared_batch", spy)
        corr = periodic_tri_prepare(*diffusion_lhs(0.5), 8)
        assert calls == [1]
        periodic_tri_solve_batch(corr, InterleavedBatch.zeros(8, 5))
        assert calls == [1, 5]

    @pytest.mark.parametrize("workers", [2, 4])
    def test_deterministic(self, rng, workers):
        corr = periodic_tri_prepare(*diffusion_lhs(0.5), 20)
        d = rng.standard_normal((20, 9))
        assert _tri(corr, d, workers).tobytes() == _tri(corr, d, 1).tobytes()


class TestPentSplitting:
    @pytest.mark.parametrize("n", [6, 7, 16, 32])
    def test_identity_exact(self, rng, n):
        corr = periodic_pent_prepare(*random_dominant_constants(rng, 5), n)
        rebuilt = corr.lhs.to_dense() + corr.U.T @ corr.V
        assert np.abs(rebuilt - corr.cyclic_dense()).max() <= 8 * np.finfo(float).eps

    def test_corner_blocks(self):
        corr = periodic_pent_prepare(1.0, 2.0, 10.0, 3.0, 4.0, 8)
        A = corr.cyclic_dense()
        np.testing.assert_array_equal(A[:2, -2:], [[1.0, 2.0], [0.0, 1.0]])
        np.testing.assert_array_equal(A[-2:, :2], [[4.0, 0.0], [3.0, 4.0]])

    def test_modified_matrix_stays_spd(self):
        corr = periodic_pent_prepare(*hyper_lhs(5.0), 12)
        A = corr.lhs.to_dense()
        assert np.allclose(A, A.T)
        assert np.linalg.eigvalsh(A).min() > 0.0

    def test_capacitance(self, rng):
        corr = periodic_pent_prepare(*random_dominant_constants(rng, 5), 10)
        np.testing.assert_allclose(corr.capacitance, np.eye(2) + corr.V @ corr.Z.T, rtol=1e-15)
        np.testing.assert_allclose(corr.capacitance @ corr.cap_inverse, np.eye(2), atol=1e-14)

    def test_uniform_factor_option(self):
        corr = periodic_pent_prepare(*hyper_lhs(0.25), 16, uniform=True)
        assert corr.factor.storage_reals() == 4 * 16 + 1

    def test_zero_centre(self):
        with pytest.raises(DivisionByZero):
            periodic_pent_prepare(0.1, 0.2, 0.0, 0.2, 0.1, 8)

    def test_singular(self):
        # hyperdiffusion symbol with unit diagonal shift removed: rows sum to 0
        with pytest.raises(SingularCorrection):
            periodic_pent_prepare(1.0, -4.0, 6.0, -4.0, 1.0, 8)

    def test_too_small(self):
        with pytest.raises(ShapeMismatch):
            periodic_pent_prepare(*hyper_lhs(0.25), 5)


class TestPentSolve:
    @pytest.mark.parametrize("sigma, n", [(0.25, 16), (1.0, 32)])
    def test_hyperdiffusion_against_cyclic_oracle(self, rng, sigma, n):
        corr = periodic_pent_prepare(*hyper_lhs(sigma), n)
        d = rng.standard_normal((n, 2))
        assert rel_err(_pent(corr, d), dense_solve_oracle(corr.cyclic_dense(), d)) <= 1e-10

    def test_uniform_matches_shared(self, rng):
        d = rng.standard_normal((16, 3))
        full = periodic_pent_prepare(*hyper_lhs(0.25), 16)
        uni = periodic_pent_prepare(*hyper_lhs(0.25), 16, uniform=True)
        assert _pent(uni, d).tobytes() == _pent(full, d).tobytes()

    def test_reduces_to_tri(self, rng):
        b, c, d_ = random_dominant_constants(rng, 3)
        rhs = rng.standard_normal((14, 3))
        pent = _pent(periodic_pent_prepare(0.0, b, c, d_, 0.0, 14), rhs)
        tri = _tri(periodic_tri_prepare(b, c, d_, 14), rhs)
        assert rel_err(pent, tri) <= 1e-10

    def test_zero_rhs(self):
        corr = periodic_pent_prepare(*hyper_lhs(0.25), 10)
        np.testing.assert_array_equal(_pent(corr, np.zeros((10, 3))), 0.0)

    def test_constant_rhs(self, rng):
        consts = random_dominant_constants(rng, 5)
        corr = periodic_pent_prepare(*consts, 11)
        np.testing.assert_allclose(_pent(corr, np.ones((11, 2))), 1 / sum(consts), rtol=1e-12)

    def test_random_batch(self, rng):
        corr = periodic_pent_prepare(*random_dominant_constants(rng, 5), 20)
        d = rng.standard_normal((20, 4))
        assert rel_err(_pent(corr, d), dense_solve_oracle(corr.cyclic_dense(), d)) <= 1e-9

    def test_shape_mismatch(self):
        corr = periodic_pent_prepare(*hyper_lhs(0.25), 8)
        with pytest.raises(ShapeMismatch):
            periodic_pent_solve_batch(corr, InterleavedBatch.zeros(9, 1))

    def test_one_banded_solve_per_call(self, monkeypatch):
        calls = []
        real = periodic.pent_solve_shared_batch

        def spy(factor, batch, **kw):
            calls.append(batch.m)
            real(factor, batch, **kw)

        monkeypatch.setattr(periodic, "pent_solve_shared_batch", spy)
        corr = periodic_pent_prepare(*hyper_lhs(0.25), 8)
        assert calls == [1, 1]
        periodic_pent_solve_batch(corr, InterleavedBatch.zeros(8, 4))
        assert calls == [1, 1, 4]

    @pytest.mark.parametrize("workers", [2, 3])
    def test_deterministic(self, rng, workers):
        corr = periodic_pent_prepare(*hyper_lhs(0.6), 24)
        d = rng.standard_normal((24, 7))
        assert _pent(corr, d, workers).tobytes() == _pent(corr, d, 1).tobytes()
