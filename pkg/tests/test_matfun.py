import numpy as np
import pytest
import scipy.linalg

from krec import (
    EXP,
    INV,
    INVSQRT,
    DomainError,
    IllConditionedError,
    ScalarFunction,
    exp_scaled,
    matfun,
    matfun_apply,
)


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_inv_diagonal():
    out = matfun(INV, np.diag([2.0, 5.0]).astype(np.complex128))
    np.testing.assert_allclose(out, np.diag([0.5, 0.2]), atol=1e-14)


def test_invsqrt_diagonal():
    out = matfun(INVSQRT, np.diag([1.0, 4.0]).astype(np.complex128))
    np.testing.assert_allclose(out, np.diag([1.0, 0.5]), atol=1e-14)


def test_exp_nilpotent():
    H = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
    np.testing.assert_allclose(matfun(EXP, H), [[1.0, 1.0], [0.0, 1.0]], atol=1e-14)


def test_exp_zero_is_identity():
    np.testing.assert_allclose(matfun(EXP, np.zeros((4, 4), dtype=np.complex128)),
                               np.eye(4), atol=1e-15)


def test_exp_diagonal_elementwise():
    a = np.array([0.3, -1.2, 2.0])
    out = matfun(EXP, np.diag(a).astype(np.complex128))
    np.testing.assert_allclose(np.diagonal(out), np.exp(a), rtol=1e-14)


def test_invsqrt_square_law():
    rng = np.random.default_rng(0)
    M = _random_complex(rng, (20, 20))
    H = M @ M.conj().T + 20 * np.eye(20)
    W = matfun(INVSQRT, H)
    np.testing.assert_allclose(W @ W @ H, np.eye(20), atol=1e-9)


def test_similarity_invariance():
    rng = np.random.default_rng(1)
    H = _random_complex(rng, (15, 15))
    H = H + 10 * np.eye(15)  # keep spectrum away from the branch cut
    Q, _ = np.linalg.qr(_random_complex(rng, (15, 15)))
    for f in (INVSQRT, INV, EXP):
        lhs = matfun(f, Q.conj().T @ H @ Q)
        rhs = Q.conj().T @ matfun(f, H) @ Q
        assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) <= 1e-10


def test_matfun_apply_trivials():
    out = matfun_apply(INV, np.array([[2.0]], dtype=np.complex128), np.array([4.0]))
    np.testing.assert_allclose(out, [2.0], atol=1e-14)
    H = np.diag([1.0, 3.0]).astype(np.complex128)
    for f in (INVSQRT, INV, EXP):
        np.testing.assert_allclose(matfun_apply(f, H, np.zeros(2)), 0.0, atol=1e-15)


def test_matfun_apply_matches_matfun():
    rng = np.random.default_rng(2)
    H = _random_complex(rng, (30, 30)) + 15 * np.eye(30)
    c = _random_complex(rng, 30)
    for f in (INVSQRT, INV, EXP, exp_scaled(0.01)):
        want = matfun(f, H) @ c
        got = matfun_apply(f, H, c)
        assert np.linalg.norm(got - want) / np.linalg.norm(want) <= 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        matfun(INV, np.diag([1.0, 1e-14]).astype(np.complex128))
    with pytest.raises(DomainError):
        matfun(INVSQRT, np.diag([1.0, -2.0]).astype(np.complex128))
    # negative real part but nonzero imaginary part is admissible for invsqrt
    matfun(INVSQRT, np.diag([-2.0 + 1.0j]).astype(np.complex128))


def test_exp_fallback_on_ill_conditioned():
    # near-defective: eigenvector matrix condition far above the fallback cutoff
    H = np.array([[1.0, 1.0], [0.0, 1.0 + 1e-13]], dtype=np.complex128)
    out = matfun(EXP, H)
    np.testing.assert_allclose(out, scipy.linalg.expm(H), rtol=1e-12)


def test_invsqrt_ill_conditioned_raises():
    H = np.array([[1.0, 1.0], [0.0, 1.0 + 1e-15]], dtype=np.complex128)
    with pytest.raises(IllConditionedError):
        matfun(INVSQRT, H)


def test_exp_scaled_tau():
    H = np.diag([2.0]).astype(np.complex128)
    out = matfun(exp_scaled(0.01), H)
    np.testing.assert_allclose(out, [[np.exp(0.02)]], rtol=1e-14)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        ScalarFunction("log")
