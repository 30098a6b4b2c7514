"""Scalar functions of small dense matrices: z^{-1/2}, z^{-1}, exp(tau*z)."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, DomainError, IllConditionedError
from .linalg import eig_dense, lu_solve

_DOMAIN_TOL = 1e-12
_EXP_FALLBACK_COND = 1e8
_FAIL_COND = 1e12


@dataclass(frozen=True)
class ScalarFunction:
    """One of the supported scalar functions.

    kind is "invsqrt" (principal branch of z^{-1/2}), "inv" (z^{-1}),
    or "exp" (exp(tau*z), tau defaulting to 1).
    """

    kind: str
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in ("invsqrt", "inv", "exp"):
            raise ValueError(f"unknown scalar function kind {self.kind!r}")

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.kind == "invsqrt":
            return 1.0 / np.sqrt(z)  # principal branch, cut on the negative reals
        if self.kind == "inv":
            return 1.0 / z
        return np.exp(self.tau * z)

    def check_spectrum(self, eigenvalues):
        """Raise DomainError if an eigenvalue is too close to the forbidden set."""
        lam = np.asarray(eigenvalues)
        if self.kind == "inv":
            dist = np.abs(lam)
        elif self.kind == "invsqrt":
            # forbidden set: the closed negative real axis
            dist = np.where(lam.real <= 0, np.abs(lam.imag), np.abs(lam))
        else:
            return
        bad = np.nonzero(dist < _DOMAIN_TOL)[0]
        if bad.size:
            raise DomainError(
                f"eigenvalue {lam[bad[0]]} within {_DOMAIN_TOL} of the forbidden set "
                f"of {self.kind}"
            )


INVSQRT = ScalarFunction("invsqrt")
INV = ScalarFunction("inv")
EXP = ScalarFunction("exp")


def exp_scaled(tau):
    return ScalarFunction("exp", tau=tau)


def _eig_with_cond(H):
    lam, W = eig_dense(H)
    cond = np.linalg.cond(W)
    return lam, W, cond


def matfun(f, H):
    """Evaluate f(H) for a small square matrix H via diagonalization.

    For the exponential, a scaling-and-squaring Pade evaluation is used when
    the eigenvector matrix is too ill-conditioned; for invsqrt/inv there is
    no fallback and severe ill-conditioning raises.
    """
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatchError("matfun requires a square matrix")
    lam, W, cond = _eig_with_cond(H)
    f.check_spectrum(lam)
    if cond > _EXP_FALLBACK_COND and f.kind == "exp":
        return scipy.linalg.expm(f.tau * H)
    if cond > _FAIL_COND:
        raise IllConditionedError(
            f"eigenvector matrix condition {cond:.2e} exceeds {_FAIL_COND:.0e} "
            f"and {f.kind} has no non-diagonalization fallback"
        )
    return W @ (f(lam)[:, np.newaxis] * lu_solve(W, np.eye(H.shape[0], dtype=np.complex128)))


def matfun_apply(f, H, c):
    """Compute f(H) @ c without forming f(H) on the diagonalization path."""
    H = np.asarray(H, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatchError("matfun_apply requires a square matrix")
    if c.shape != (H.shape[0],):
        raise DimensionMismatchError("vector length incompatible with matrix")
    lam, W, cond = _eig_with_cond(H)
    f.check_spectrum(lam)
    if cond > _EXP_FALLBACK_COND and f.kind == "exp":
        return scipy.linalg.expm(f.tau * H) @ c
    if cond > _FAIL_COND:
        raise IllConditionedError(
            f"eigenvector matrix condition {cond:.2e} exceeds {_FAIL_COND:.0e} "
            f"and {f.kind} has no non-diagonalization fallback"
        )
    return W @ (f(lam) * lu_solve(W, c))
