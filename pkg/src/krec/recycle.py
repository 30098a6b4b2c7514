"""Recycling-subspace maintenance between problems in a sequence.

The augmentation basis U is extracted from the working basis of the previous
problem: by orthonormal Rayleigh-Ritz for rFOM, by sketched Rayleigh-Ritz
(with an optional SVD-stabilized pencil reduction) for srFOM.  Cached sketch
products SU / SAU and the optional exact AU are tagged with the matrix epoch
they were computed against.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, EpochMismatchError, RankDeficiencyError
from .linalg import partial_schur_closest_to_origin, svd_econ


@dataclass
class RecycleState:
    U: np.ndarray              # N x k augmentation basis (k may be 0)
    SU: np.ndarray | None = None   # s x k cached sketch of U
    SAU: np.ndarray | None = None  # s x k cached sketch of A_epoch @ U
    AU: np.ndarray | None = None   # optional exact A_epoch @ U
    matrix_epoch: object = None
    k_target: int = 0
    ritz_values: np.ndarray | None = None

    @property
    def k(self):
        return self.U.shape[1]

    @classmethod
    def empty(cls, N, k_target=0):
        return cls(U=np.zeros((N, 0), dtype=np.complex128), k_target=k_target)


def update_orthonormal(basis, G, k):
    """Extract a k-dimensional orthonormal U from an orthonormal working basis.

    G must be basis* A basis; the eigenvalues of G closest to the origin are
    targeted.  Returns (U, ritz_values).
    """
    if k == 0:
        return np.zeros((basis.shape[0], 0), dtype=np.complex128), np.zeros(0, dtype=np.complex128)
    ps = partial_schur_closest_to_origin(G, k)
    return np.asarray(basis) @ ps.X, np.diagonal(ps.T).copy()


def srr_matrix(qr, SAV):
    """Sketched Rayleigh-Ritz matrix R^{-1} Q* (S A Vhat) from the QR of S Vhat."""
    SAV = np.asarray(SAV)
    d = np.abs(np.diagonal(qr.R))
    if d.size and d.min() <= 1e-13 * d.max():
        raise RankDeficiencyError("singular R in sRR; use update_sketched_stab")
    return scipy.linalg.solve_triangular(qr.R, qr.Q.conj().T @ SAV)


def update_sketched(bundle, k):
    """Sketched Rayleigh-Ritz recycling update from a sketched FOM bundle.

    U, SU and SAU are all obtained by right-multiplying the cached working-set
    matrices with the Schur basis X; no sketches or matvecs are performed.
    """
    from .linalg import qr_econ  # local import to keep module deps one-way

    qr = bundle.qr if bundle.qr is not None else qr_econ(bundle.SVhat)
    M = srr_matrix(qr, bundle.SAVhat)
    ps = partial_schur_closest_to_origin(M, min(k, M.shape[0]))
    return RecycleState(
        U=bundle.Vhat @ ps.X,
        SU=bundle.SVhat @ ps.X,
        SAU=bundle.SAVhat @ ps.X,
        matrix_epoch=bundle.matrix_epoch,
        k_target=k,
        ritz_values=np.diagonal(ps.T).copy(),
    )


def update_sketched_stab(Vhat, SVhat, SAVhat, k, svdtol=1e-14, matrix_epoch=None):
    """Stabilized recycling update via the truncated-SVD pencil reduction.

    The ordered-pencil extraction on (L* SAVhat J, Sigma) is realized by
    reducing to the standard eigenproblem Sigma^{-1} (L* SAVhat J), which is
    valid because Sigma is diagonal positive.  If fewer than k singular values
    survive the cutoff, k is reduced with a warning.
    """
    dec = svd_econ(np.asarray(SVhat))
    if dec.sigma.size == 0:
        raise RankDeficiencyError("empty sketched basis")
    ell = int(np.count_nonzero(dec.sigma >= svdtol * dec.sigma[0]))
    if ell == 0:
        raise RankDeficiencyError("all singular values below the svdtol cutoff")
    if ell < k:
        warnings.warn(f"stabilized update reduced k from {k} to {ell}", stacklevel=2)
        k = ell
    L, sig, J = dec.L[:, :ell], dec.sigma[:ell], dec.J[:, :ell]
    M = (L.conj().T @ np.asarray(SAVhat) @ J) / sig[:, np.newaxis]
    ps = partial_schur_closest_to_origin(M, k)
    JX = J @ ps.X
    return RecycleState(
        U=np.asarray(Vhat) @ JX,
        SU=np.asarray(SVhat) @ JX,
        SAU=np.asarray(SAVhat) @ JX,
        matrix_epoch=matrix_epoch,
        k_target=k,
        ritz_values=np.diagonal(ps.T).copy(),
    )


def propagate_AU(prev_AU, fac, X_kry, X_aug):
    """Exact A @ U_new without matvecs, for U_new = V_m @ X_kry + U_old @ X_aug.

    Requires the matrix to be unchanged since prev_AU = A @ U_old was formed
    and fac to be the Arnoldi factorization of the same A.
    """
    X_kry = np.asarray(X_kry)
    X_aug = np.asarray(X_aug)
    if X_kry.shape[0] != fac.m:
        raise DimensionMismatchError("X_kry rows must match the Krylov dimension")
    if prev_AU is None:
        if X_aug.shape[0] != 0:
            raise EpochMismatchError("no cached AU for the augmentation block")
        prev_AU = np.zeros((fac.V.shape[0], 0), dtype=np.complex128)
    elif prev_AU.shape[1] != X_aug.shape[0]:
        raise EpochMismatchError("cached AU width does not match X_aug rows")
    out = fac.V @ (fac.square_h() @ X_kry) + prev_AU @ X_aug
    if fac.breakdown is None:
        out += np.outer(fac.h_tail * fac.v_next, X_kry[-1, :])
    return out


def update_inexact(bundle, k):
    """Inexact sketched Rayleigh-Ritz update (configuration-flag path).

    Identical arithmetic to update_sketched; the inexactness (stale SAU
    columns for a changed matrix) is introduced upstream by running the
    sketched step with the inexact flag, which skips the SAU refresh.
    """
    return update_sketched(bundle, k)
