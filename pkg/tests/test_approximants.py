import numpy as np
import pytest

from krec import (
    EXP,
    INV,
    INVSQRT,
    Counters,
    CSRMatrix,
    MODE_TRUNCATED,
    RankDeficiencyError,
    arnoldi_build,
    fom_closed,
    gmres_type_closed,
    oracle_exact,
    rfom_step,
    sfom_whitened,
    sketch_av_from_arnoldi,
    sgmres_type,
    sgmres_type_stab,
    sketch_apply,
    sketch_new,
    srfom_stab,
    srfom_step,
)

ALL_F = (INVSQRT, INV, EXP)


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _random_hpd(rng, n, shift=None):
    M = _random_complex(rng, (n, n))
    return CSRMatrix.from_dense(M @ M.conj().T + (shift or n) * np.eye(n))


def _random_shifted(rng, n):
    # non-Hermitian with spectrum shifted off the negative real axis
    return CSRMatrix.from_dense(_random_complex(rng, (n, n)) + 3 * n * np.eye(n))


def _isometric_sketch_columns(S, M):
    return np.column_stack([sketch_apply(S, M[:, j]) for j in range(M.shape[1])])


class TestFomClosed:
    def test_exactness_diag(self):
        A = CSRMatrix.from_dense(np.diag([1.0, 4.0]))
        b = np.ones(2, dtype=np.complex128)
        fac = arnoldi_build(A, b, 2)
        out = fom_closed(fac.V, fac.square_h(), b, INVSQRT)
        np.testing.assert_allclose(out.full_vector(), [1.0, 0.5], atol=1e-13)

    def test_hand_value_m1(self):
        A = CSRMatrix.from_dense(np.diag([1.0, 4.0]))
        b = np.ones(2, dtype=np.complex128)
        fac = arnoldi_build(A, b, 1)
        out = fom_closed(fac.V, fac.square_h(), b, INVSQRT)
        np.testing.assert_allclose(fac.square_h(), [[2.5]], atol=1e-14)
        want = 2.5 ** (-0.5) * np.ones(2)
        np.testing.assert_allclose(out.full_vector(), want, atol=1e-12)
        np.testing.assert_allclose(out.full_vector(), [0.63246, 0.63246], atol=1e-5)

    def test_inv_matches_dense_solve(self):
        rng = np.random.default_rng(0)
        A = _random_hpd(rng, 20)
        b = _random_complex(rng, 20)
        fac = arnoldi_build(A, b, 20)
        out = fom_closed(fac.V, fac.square_h(), b, INV)
        want = np.linalg.solve(A.to_dense(), b)
        assert np.linalg.norm(out.full_vector() - want) / np.linalg.norm(want) <= 1e-11

    def test_galerkin_residual_orthogonality(self):
        rng = np.random.default_rng(1)
        A = _random_hpd(rng, 60)
        b = _random_complex(rng, 60)
        fac = arnoldi_build(A, b, 15)
        out = fom_closed(fac.V, fac.square_h(), b, INV)
        resid = b - A.to_dense() @ out.full_vector()
        assert np.linalg.norm(fac.V.conj().T @ resid) <= 1e-10 * np.linalg.norm(b)


class TestRfomStep:
    def test_empty_u_reduces_to_fom(self):
        rng = np.random.default_rng(2)
        A = _random_hpd(rng, 50)
        b = _random_complex(rng, 50)
        fac = arnoldi_build(A, b, 12)
        plain = fom_closed(fac.V, fac.square_h(), b, INVSQRT)
        res = rfom_step(A, b, None, 12, INVSQRT)
        diff = np.linalg.norm(res.approximant.full_vector() - plain.full_vector())
        assert diff <= 1e-13 * np.linalg.norm(plain.full_vector())

    def test_invariant_subspace_improves_error(self):
        rng = np.random.default_rng(3)
        n = 80
        lam = np.concatenate([[0.01, 0.02, 0.03], np.linspace(1, 5, n - 3)])
        Q, _ = np.linalg.qr(_random_complex(rng, (n, n)))
        dense = Q @ np.diag(lam) @ Q.conj().T
        A = CSRMatrix.from_dense(dense)
        b = _random_complex(rng, n)
        exact = oracle_exact(A, b, INVSQRT)
        U = Q[:, :3]  # eigenvectors of the small cluster
        m = 10
        err_fom = np.linalg.norm(
            rfom_step(A, b, None, m, INVSQRT).approximant.full_vector() - exact)
        err_rfom = np.linalg.norm(
            rfom_step(A, b, U, m, INVSQRT).approximant.full_vector() - exact)
        assert err_rfom < err_fom

    def test_matvec_counts(self):
        rng = np.random.default_rng(4)
        A = _random_hpd(rng, 60)
        b = _random_complex(rng, 60)
        U, _ = np.linalg.qr(_random_complex(rng, (60, 5)))
        m, k = 10, 5
        c = Counters()
        rfom_step(A, b, U, m, INVSQRT, counters=c)
        assert c.snapshot()[0] == m + 1 + k
        AU = A.to_dense() @ U
        c = Counters()
        rfom_step(A, b, U, m, INVSQRT, AU=AU, counters=c)
        assert c.snapshot()[0] == m + 1

    def test_rank_deficient_augmentation_dropped(self):
        rng = np.random.default_rng(5)
        A = _random_hpd(rng, 40)
        b = _random_complex(rng, 40)
        fac = arnoldi_build(A, b, 8)
        U = fac.V[:, :2]  # lies inside the Krylov space: dependent columns
        with pytest.warns(UserWarning):
            res = rfom_step(A, b, U, 8, INVSQRT)
        assert res.k_used < 2
        assert np.all(np.isfinite(res.approximant.full_vector()))


class TestSfomWhitened:
    def test_isometric_sketch_equals_fom(self):
        rng = np.random.default_rng(6)
        A = _random_hpd(rng, 64)
        b = _random_complex(rng, 64)
        fac = arnoldi_build(A, b, 15)
        S = sketch_new(64, 64, seed=0)
        SV = _isometric_sketch_columns(S, fac.V)
        AV = A.to_dense() @ fac.V
        SAV = _isometric_sketch_columns(S, AV)
        Sb = sketch_apply(S, b)
        out = sfom_whitened(fac.V, SV, SAV, Sb, INVSQRT)
        want = fom_closed(fac.V, fac.square_h(), b, INVSQRT).full_vector()
        assert np.linalg.norm(out.full_vector() - want) <= 1e-11 * np.linalg.norm(want)

    def test_error_within_factor_of_fom(self):
        rng = np.random.default_rng(7)
        failures = 0
        for seed in range(20):
            A = _random_hpd(rng, 300, shift=30)
            b = _random_complex(rng, 300)
            exact = oracle_exact(A, b, INV)
            fac = arnoldi_build(A, b, 30, mode=MODE_TRUNCATED)
            S = sketch_new(300, 120, seed=seed)
            SV = _isometric_sketch_columns(S, fac.V)
            AV = A.to_dense() @ fac.V
            SAV = _isometric_sketch_columns(S, AV)
            out = sfom_whitened(fac.V, SV, SAV, sketch_apply(S, b), INV)
            fomv = rfom_step(A, b, None, 30, INV).approximant.full_vector()
            e_sfom = np.linalg.norm(out.full_vector() - exact)
            e_fom = np.linalg.norm(fomv - exact)
            if e_sfom > 10 * e_fom:
                failures += 1
        assert failures <= 2

    def test_rank_deficiency_raises(self):
        rng = np.random.default_rng(8)
        SV = _random_complex(rng, (20, 4))
        SV[:, 3] = SV[:, 0]
        with pytest.raises(RankDeficiencyError):
            sfom_whitened(np.zeros((30, 4)), SV, SV, np.zeros(20), INV)


class TestSrfomStab:
    def _setup(self, rng, n=60, m=12, s=40, seed=0):
        A = _random_hpd(rng, n)
        b = _random_complex(rng, n)
        fac = arnoldi_build(A, b, m)
        S = sketch_new(n, s, seed=seed)
        SV = _isometric_sketch_columns(S, fac.V)
        AV = A.to_dense() @ fac.V
        SAV = _isometric_sketch_columns(S, AV)
        return A, b, fac.V, SV, SAV, sketch_apply(S, b)

    def test_well_conditioned_matches_unstabilized(self):
        rng = np.random.default_rng(9)
        A, b, V, SV, SAV, Sb = self._setup(rng)
        out = srfom_stab(V, SV, SAV, Sb, INVSQRT)
        want = sfom_whitened(V, SV, SAV, Sb, INVSQRT)
        diff = np.linalg.norm(out.full_vector() - want.full_vector())
        assert diff <= 1e-10 * np.linalg.norm(want.full_vector())

    def test_duplicated_column_reduces_ell(self):
        rng = np.random.default_rng(10)
        A, b, V, SV, SAV, Sb = self._setup(rng)
        V2 = np.column_stack([V, V[:, 0]])
        SV2 = np.column_stack([SV, SV[:, 0]])
        SAV2 = np.column_stack([SAV, SAV[:, 0]])
        out = srfom_stab(V2, SV2, SAV2, Sb, INVSQRT)
        assert out.ell == SV2.shape[1] - 1
        assert np.all(np.isfinite(out.full_vector()))

    def test_svdtol_zero_matches(self):
        rng = np.random.default_rng(11)
        A, b, V, SV, SAV, Sb = self._setup(rng)
        out = srfom_stab(V, SV, SAV, Sb, INV, svdtol=0.0)
        want = sfom_whitened(V, SV, SAV, Sb, INV)
        diff = np.linalg.norm(out.full_vector() - want.full_vector())
        assert diff <= 1e-10 * np.linalg.norm(want.full_vector())


class TestSrfomStep:
    def test_empty_recycle_equals_sfom(self):
        rng = np.random.default_rng(12)
        A = _random_hpd(rng, 80)
        b = _random_complex(rng, 80)
        S = sketch_new(80, 40, seed=1)
        approx, bundle = srfom_step(A, b, S, None, 15, INVSQRT)
        fac = arnoldi_build(A, b, 15, mode=MODE_TRUNCATED)
        SV = _isometric_sketch_columns(S, fac.V)
        SAV = sketch_av_from_arnoldi(S, fac, SV, sketch_apply(S, fac.v_next))
        Sb = np.linalg.norm(b) * SV[:, 0]
        want = sfom_whitened(fac.V, SV, SAV, Sb, INVSQRT)
        np.testing.assert_array_equal(approx.coeffs, want.coeffs)

    def test_sketch_count_is_m_plus_one(self):
        rng = np.random.default_rng(13)
        A = _random_hpd(rng, 80)
        b = _random_complex(rng, 80)
        S = sketch_new(80, 40, seed=2)
        c = Counters()
        srfom_step(A, b, S, None, 15, INVSQRT, counters=c)
        mv, _, sk = c.snapshot()
        assert sk == 16
        assert mv == 16


class TestGmresType:
    def test_breakdown_equals_fom(self):
        A = CSRMatrix.from_dense(np.diag([1.0, 4.0]))
        b = np.ones(2, dtype=np.complex128)
        fac = arnoldi_build(A, b, 2)
        assert fac.breakdown is not None or abs(fac.h_tail) <= 1e-13
        g = gmres_type_closed(fac, b, INVSQRT)
        f = fom_closed(fac.V, fac.square_h(), b, INVSQRT)
        np.testing.assert_allclose(g.full_vector(), f.full_vector(), atol=1e-12)

    def test_full_space_exact(self):
        rng = np.random.default_rng(14)
        A = _random_hpd(rng, 18)
        b = _random_complex(rng, 18)
        fac = arnoldi_build(A, b, 18)
        out = gmres_type_closed(fac, b, INV)
        want = np.linalg.solve(A.to_dense(), b)
        assert np.linalg.norm(out.full_vector() - want) / np.linalg.norm(want) <= 1e-11

    def test_minimal_residual_coordinates(self):
        rng = np.random.default_rng(15)
        A = _random_hpd(rng, 50)
        b = _random_complex(rng, 50)
        fac = arnoldi_build(A, b, 10)
        out = gmres_type_closed(fac, b, INV)
        AV = A.to_dense() @ fac.V
        want, *_ = np.linalg.lstsq(AV, b, rcond=None)
        assert np.linalg.norm(out.coeffs - want) <= 1e-10 * np.linalg.norm(want)

    def test_requires_full_mode(self):
        rng = np.random.default_rng(16)
        A = _random_hpd(rng, 30)
        b = _random_complex(rng, 30)
        fac = arnoldi_build(A, b, 5, mode=MODE_TRUNCATED)
        with pytest.raises(ValueError):
            gmres_type_closed(fac, b, INV)


class TestSgmresType:
    def _setup(self, rng, n=60, m=12, s=60):
        A = _random_hpd(rng, n)
        b = _random_complex(rng, n)
        fac = arnoldi_build(A, b, m)
        S = sketch_new(n, s, seed=3)
        SV = _isometric_sketch_columns(S, fac.V)
        AV = A.to_dense() @ fac.V
        SW = _isometric_sketch_columns(S, AV)
        return A, b, fac, SV, SW, sketch_apply(S, b)

    def test_isometric_limit(self):
        rng = np.random.default_rng(17)
        A, b, fac, SV, SW, Sb = self._setup(rng, n=64, s=64)
        out = sgmres_type(SV, SW, Sb, fac.V, INVSQRT)
        want = gmres_type_closed(fac, b, INVSQRT)
        diff = np.linalg.norm(out.full_vector() - want.full_vector())
        assert diff <= 1e-10 * np.linalg.norm(want.full_vector())

    def test_full_space_exact(self):
        rng = np.random.default_rng(18)
        n = 16
        A = _random_hpd(rng, n)
        b = _random_complex(rng, n)
        fac = arnoldi_build(A, b, n)
        S = sketch_new(n, n, seed=4)
        SV = _isometric_sketch_columns(S, fac.V)
        AV = A.to_dense() @ fac.V
        SW = _isometric_sketch_columns(S, AV)
        out = sgmres_type(SV, SW, sketch_apply(S, b), fac.V, INV)
        want = np.linalg.solve(A.to_dense(), b)
        assert np.linalg.norm(out.full_vector() - want) / np.linalg.norm(want) <= 1e-10

    def test_stab_matches_and_handles_duplicates(self):
        rng = np.random.default_rng(19)
        A, b, fac, SV, SW, Sb = self._setup(rng)
        out = sgmres_type(SV, SW, Sb, fac.V, INV)
        stab = sgmres_type_stab(SV, SW, Sb, fac.V, INV, svdtol=1e-14)
        diff = np.linalg.norm(out.full_vector() - stab.full_vector())
        assert diff <= 1e-9 * np.linalg.norm(out.full_vector())
        zero = sgmres_type_stab(SV, SW, Sb, fac.V, INV, svdtol=0.0)
        np.testing.assert_allclose(zero.full_vector(), out.full_vector(), atol=1e-9)
        V2 = np.column_stack([fac.V, fac.V[:, 0]])
        SV2 = np.column_stack([SV, SV[:, 0]])
        SW2 = np.column_stack([SW, SW[:, 0]])
        dup = sgmres_type_stab(SV2, SW2, Sb, V2, INV, svdtol=1e-14)
        assert dup.ell == SW2.shape[1] - 1
        assert np.all(np.isfinite(dup.full_vector()))


def test_augmented_order_invariance():
    rng = np.random.default_rng(20)
    A = _random_hpd(rng, 60)
    b = _random_complex(rng, 60)
    fac = arnoldi_build(A, b, 10, mode=MODE_TRUNCATED)
    U, _ = np.linalg.qr(_random_complex(rng, (60, 4)))
    S = sketch_new(60, 40, seed=5)
    dense = A.to_dense()

    def whitened(cols):
        SV = _isometric_sketch_columns(S, cols)
        SAV = _isometric_sketch_columns(S, dense @ cols)
        return sfom_whitened(cols, SV, SAV, sketch_apply(S, b), INVSQRT).full_vector()

    uv = whitened(np.column_stack([U, fac.V]))
    vu = whitened(np.column_stack([fac.V, U]))
    assert np.linalg.norm(uv - vu) <= 1e-8 * np.linalg.norm(vu)
