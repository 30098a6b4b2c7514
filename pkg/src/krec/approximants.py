"""Closed-form extraction formulas: FOM, recycled FOM, sketched/whitened FOM,
sketch-and-recycle FOM, the SVD-stabilized variant, and the GMRES-type family.

All operations return an Approximant carrying the short coefficient vector;
the full N-length vector is materialized lazily since the O(N(m+k)) linear
combination should be avoided whenever possible.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .arnoldi import MODE_TRUNCATED, arnoldi_build
from .errors import DimensionMismatchError, RankDeficiencyError
from .linalg import lu_solve, qr_econ, svd_econ
from .matfun import matfun_apply
from .sketch import sketch_apply, sketch_av_from_arnoldi
from .sparse import csr_matvec

_RANK_TOL = 1e-13       # relative R-diagonal cutoff for the whitened path
_COND_LIMIT = 1e14      # condition estimate cutoff for sgmres_type
_DROP_TOL = 1e-12       # augmented-basis column drop threshold


@dataclass
class Approximant:
    """Coefficients of an approximant in a working basis."""

    coeffs: np.ndarray
    basis: np.ndarray
    basis_tag: str = ""
    ell: int | None = None
    _full: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.basis_tag:
            self.basis_tag = f"basis-{id(self.basis):x}"
        if self.basis.shape[1] != self.coeffs.shape[0]:
            raise DimensionMismatchError("coefficient length must match basis width")

    def full_vector(self):
        """Materialize basis @ coeffs (cached)."""
        if self._full is None:
            self._full = self.basis @ self.coeffs
        return self._full


def _right_div_triangular(P, R):
    """Return P @ R^{-1} for upper-triangular R."""
    return scipy.linalg.solve_triangular(R.T, P.T, lower=True).T


def fom_closed(V, G, b, f, counters=None):
    """FOM / Rayleigh-Ritz approximant V f(G) V* b for orthonormal V, G = V* A V."""
    V = np.asarray(V)
    b = np.asarray(b, dtype=np.complex128)
    c = V.conj().T @ b
    if counters is not None:
        counters.add_inner_products(V.shape[1])
    coeffs = matfun_apply(f, G, c)
    return Approximant(coeffs=coeffs, basis=V)


@dataclass
class RfomResult:
    approximant: Approximant
    basis: np.ndarray    # orthonormal augmented basis Q
    G: np.ndarray        # Q* A Q
    fac: object          # the Arnoldi factorization used
    A_basis: np.ndarray  # A @ (pre-orthonormalization augmented columns)
    R: np.ndarray        # triangular factor linking Q to those columns
    k_used: int          # augmentation columns actually retained


def rfom_step(A, b, U, m, f, AU=None, counters=None, fac=None):
    """One recycled-FOM step: orthonormal Krylov + augmentation extraction.

    Builds a fully orthogonalized Arnoldi factorization (m+1 matvecs), forms
    the orthonormal augmented basis of [U, V_m], and evaluates the closed-form
    approximant.  The Krylov block of A times the basis comes from the Arnoldi
    relation; the k augmentation columns cost k matvecs unless a cached AU is
    supplied, in which case no extra matvecs are performed.  A prebuilt
    factorization of K_m(A, b) may be passed to skip the Arnoldi build (used
    by the adaptive driver loop, which extends one factorization).
    """
    b = np.asarray(b, dtype=np.complex128)
    U = np.zeros((A.nrows, 0), dtype=np.complex128) if U is None else np.asarray(U)
    k = U.shape[1]
    if fac is None:
        fac = arnoldi_build(A, b, m, mode="full", counters=counters)
    V = fac.V
    AV = V @ fac.square_h()
    if fac.breakdown is None:
        AV[:, -1] += fac.h_tail * fac.v_next
    if k and AU is None:
        AU = np.column_stack([csr_matvec(A, U[:, j], counters) for j in range(k)])
    elif k == 0:
        AU = np.zeros((A.nrows, 0), dtype=np.complex128)
    B = np.column_stack([U, V])
    AB = np.column_stack([AU, AV])
    qr = qr_econ(B, counters)
    d = np.abs(np.diagonal(qr.R))
    if np.any(d <= _DROP_TOL * max(d.max(), 1.0)):
        # V is orthonormal, so any dependency is attributable to U: rank-check
        # with the Krylov block first to find the offending U columns.
        probe = qr_econ(np.column_stack([V, U]))
        dp = np.abs(np.diagonal(probe.R))
        bad_u = np.nonzero(dp[V.shape[1]:] <= _DROP_TOL * max(dp.max(), 1.0))[0]
        warnings.warn(
            f"dropping {bad_u.size} numerically dependent augmentation column(s)",
            stacklevel=2,
        )
        keep_u = np.setdiff1d(np.arange(k), bad_u)
        U, AU = U[:, keep_u], AU[:, keep_u]
        k = keep_u.size
        B = np.column_stack([U, V])
        AB = np.column_stack([AU, AV])
        qr = qr_econ(B, counters)
    Q, R = qr.Q, qr.R
    G = _right_div_triangular(Q.conj().T @ AB, R)
    approx = fom_closed(Q, G, b, f, counters)
    return RfomResult(approximant=approx, basis=Q, G=G, fac=fac,
                      A_basis=AB, R=R, k_used=k)


def sfom_whitened(Vhat, SV, SAV, Sb, f):
    """Whitened sketched FOM: coeffs = R^{-1} f(Q* SAV R^{-1}) Q* Sb, QR of SV."""
    SV = np.asarray(SV)
    SAV = np.asarray(SAV)
    if SV.shape != SAV.shape:
        raise DimensionMismatchError("SV and SAV must have equal shapes")
    qr = qr_econ(SV)
    d = np.abs(np.diagonal(qr.R))
    if d.size and (d.min() <= _RANK_TOL * d.max()):
        raise RankDeficiencyError(
            "sketched basis is numerically rank-deficient; use srfom_stab"
        )
    G = _right_div_triangular(qr.Q.conj().T @ SAV, qr.R)
    y = matfun_apply(f, G, qr.Q.conj().T @ np.asarray(Sb))
    coeffs = scipy.linalg.solve_triangular(qr.R, y)
    return Approximant(coeffs=coeffs, basis=np.asarray(Vhat))


def srfom_stab(Vhat, SV, SAV, Sb, f, svdtol=1e-14):
    """Truncated-SVD stabilized sketched FOM approximant.

    The SVD of SV is truncated at the largest ell with
    sigma_ell >= svdtol * sigma_1 (relative form; near-unit-norm sketched
    columns make this coincide with an absolute cutoff).
    """
    SV = np.asarray(SV)
    SAV = np.asarray(SAV)
    dec = svd_econ(SV)
    if dec.sigma.size == 0:
        raise RankDeficiencyError("empty sketched basis")
    ell = int(np.count_nonzero(dec.sigma >= svdtol * dec.sigma[0]))
    if ell == 0:
        raise RankDeficiencyError("all singular values below the svdtol cutoff")
    L, sig, J = dec.L[:, :ell], dec.sigma[:ell], dec.J[:, :ell]
    G = (L.conj().T @ SAV @ J) / sig[np.newaxis, :]
    y = matfun_apply(f, G, L.conj().T @ np.asarray(Sb))
    coeffs = J @ (y / sig)
    return Approximant(coeffs=coeffs, basis=np.asarray(Vhat), ell=ell)


@dataclass
class SketchedBundle:
    """Working set handed from a sketched FOM step to the recycling update."""

    Vhat: np.ndarray
    SVhat: np.ndarray
    SAVhat: np.ndarray
    qr: object           # EconQR of SVhat, None when the stabilized path was used
    fac: object
    matrix_epoch: object


def srfom_step(A, b, S, recycle, m, f, t=2, counters=None, stabilized=False,
               svdtol=1e-14, matrix_epoch=None, inexact=False):
    """One sketch-and-recycle FOM step with a truncated Arnoldi basis.

    The basis sketches cost m+1 sketch applications; S b is recovered from
    S v_1 and S A V_m from the Arnoldi relation at no sketching cost.  Cached
    SU / SAU from the recycle state are reused when the matrix epoch matches
    (or unconditionally in inexact mode); otherwise A U is recomputed at k
    matvecs plus k sketches.
    """
    b = np.asarray(b, dtype=np.complex128)
    fac = arnoldi_build(A, b, m, mode=MODE_TRUNCATED, t=t, counters=counters)
    SV = np.column_stack([sketch_apply(S, fac.V[:, j], counters)
                          for j in range(fac.m)])
    s_next = None if fac.breakdown is not None else sketch_apply(S, fac.v_next, counters)
    SAV = sketch_av_from_arnoldi(S, fac, SV, s_next)
    Sb = np.linalg.norm(b) * SV[:, 0]
    if recycle is not None and recycle.k > 0:
        U, SU, SAU = recycle.U, recycle.SU, recycle.SAU
        if matrix_epoch is not None and recycle.matrix_epoch != matrix_epoch and not inexact:
            AU = np.column_stack([csr_matvec(A, U[:, j], counters)
                                  for j in range(U.shape[1])])
            SAU = np.column_stack([sketch_apply(S, AU[:, j], counters)
                                   for j in range(U.shape[1])])
        Vhat = np.column_stack([fac.V, U])
        SVhat = np.column_stack([SV, SU])
        SAVhat = np.column_stack([SAV, SAU])
    else:
        Vhat, SVhat, SAVhat = fac.V, SV, SAV
    if stabilized:
        approx = srfom_stab(Vhat, SVhat, SAVhat, Sb, f, svdtol=svdtol)
        qr = None
    else:
        approx = sfom_whitened(Vhat, SVhat, SAVhat, Sb, f)
        qr = qr_econ(SVhat)
    bundle = SketchedBundle(Vhat=Vhat, SVhat=SVhat, SAVhat=SAVhat, qr=qr,
                            fac=fac, matrix_epoch=matrix_epoch)
    return approx, bundle


def gmres_type_closed(fac, b, f):
    """GMRES-type approximant from a fully orthogonalized Arnoldi factorization."""
    if fac.mode != "full":
        raise ValueError("gmres_type_closed requires a fully orthogonalized basis")
    b = np.asarray(b, dtype=np.complex128)
    Hm = fac.square_h().copy()
    if fac.breakdown is None and fac.h_tail != 0:
        x = lu_solve(Hm.conj().T, np.eye(fac.m, dtype=np.complex128)[:, -1])
        Hm[:, -1] += abs(fac.h_tail) ** 2 * x
    e1 = np.zeros(fac.m, dtype=np.complex128)
    e1[0] = np.linalg.norm(b)
    coeffs = matfun_apply(f, Hm, e1)
    return Approximant(coeffs=coeffs, basis=fac.V)


def sgmres_type(SV, SW, Sb, Vhat, f):
    """Sketched GMRES-type approximant with SW = S @ A @ Vhat."""
    SV = np.asarray(SV)
    SW = np.asarray(SW)
    B = SW.conj().T @ SV
    if np.linalg.cond(B) > _COND_LIMIT:
        raise RankDeficiencyError(
            "(SW)* SV is near-singular; use sgmres_type_stab"
        )
    G = lu_solve(B, SW.conj().T @ SW)
    z = lu_solve(B, SW.conj().T @ np.asarray(Sb))
    coeffs = matfun_apply(f, G, z)
    return Approximant(coeffs=coeffs, basis=np.asarray(Vhat))


def sgmres_type_stab(SV, SW, Sb, Vhat, f, svdtol=1e-14):
    """Stabilized sketched GMRES-type approximant via a truncated SVD of SW."""
    SV = np.asarray(SV)
    dec = svd_econ(np.asarray(SW))
    if dec.sigma.size == 0:
        raise RankDeficiencyError("empty sketched basis")
    ell = int(np.count_nonzero(dec.sigma >= svdtol * dec.sigma[0]))
    if ell == 0:
        raise RankDeficiencyError("all singular values below the svdtol cutoff")
    L, sig, J = dec.L[:, :ell], dec.sigma[:ell], dec.J[:, :ell]
    K = L.conj().T @ SV @ J
    G = lu_solve(K, np.diag(sig).astype(np.complex128))
    z = lu_solve(K, L.conj().T @ np.asarray(Sb))
    coeffs = J @ matfun_apply(f, G, z)
    return Approximant(coeffs=coeffs, basis=np.asarray(Vhat), ell=ell)
