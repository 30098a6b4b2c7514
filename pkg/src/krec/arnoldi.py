"""Arnoldi factorizations: fully orthogonalized and t-truncated.

A factorization holds V (N x m), the (m+1) x m Hessenberg H, the next basis
vector v_next, and a cached w_next = A @ v_next used to continue the
recurrence when the factorization is extended.  Computing w_next eagerly is
why a build of cycle length m costs exactly m+1 matvecs.

Inner-product accounting (see counters.py): in full-orthogonalization mode,
step j performs j projection coefficients and one norm per pass, with one
unconditional reorthogonalization pass, so 2*(j+1) inner products per step.
In truncated mode step j costs min(j, t) + 1 inner products.  The norm used
only for breakdown detection and the initial normalization of b are not
counted.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError
from .sparse import csr_matvec

_BREAKDOWN_TOL = 1e-14

MODE_FULL = "full"
MODE_TRUNCATED = "truncated"


@dataclass(frozen=True)
class ArnoldiFactorization:
    V: np.ndarray        # N x m basis
    H: np.ndarray        # (m+1) x m upper Hessenberg; H[m, m-1] = h_{m+1,m}
    v_next: np.ndarray   # (m+1)-st basis vector, None after breakdown
    w_next: np.ndarray   # cached A @ v_next, None after breakdown
    mode: str            # MODE_FULL or MODE_TRUNCATED
    t: int               # truncation window (ignored in full mode)
    breakdown: int | None = None  # 1-based step of lucky breakdown

    @property
    def m(self):
        return self.V.shape[1]

    @property
    def h_tail(self):
        return self.H[self.m, self.m - 1]

    def square_h(self):
        return self.H[: self.m, : self.m]


def _advance(A, V, H, j_start, j_end, mode, t, counters, pending_w):
    """Run Arnoldi steps j_start..j_end-1 in place; return (v_next, w_next, breakdown)."""
    w = pending_w
    for j in range(j_start, j_end):
        if w is None:
            w = csr_matvec(A, V[:, j], counters)
        wnorm = np.linalg.norm(w)
        lo = 0 if mode == MODE_FULL else max(0, j + 1 - t)
        for i in range(lo, j + 1):
            hij = np.vdot(V[:, i], w)
            H[i, j] += hij
            w = w - hij * V[:, i]
        if counters is not None:
            counters.add_inner_products(j + 1 - lo)
        hnorm = np.linalg.norm(w)
        if counters is not None:
            counters.add_inner_products(1)
        if mode == MODE_FULL:
            for i in range(0, j + 1):
                cij = np.vdot(V[:, i], w)
                H[i, j] += cij
                w = w - cij * V[:, i]
            hnorm = np.linalg.norm(w)
            if counters is not None:
                counters.add_inner_products(j + 2)
        if hnorm <= _BREAKDOWN_TOL * wnorm:
            return None, None, j + 1
        H[j + 1, j] = hnorm
        v = w / hnorm
        if j + 1 < j_end:
            V[:, j + 1] = v
        else:
            w_next = csr_matvec(A, v, counters)
            return v, w_next, None
        w = None
    raise AssertionError("unreachable")


def arnoldi_build(A, b, m, mode=MODE_FULL, t=2, counters=None):
    """Build an m-step Arnoldi factorization of A started at b."""
    b = np.asarray(b, dtype=np.complex128)
    if b.shape != (A.ncols,):
        raise DimensionMismatchError("start vector length incompatible with A")
    if m < 1:
        raise ValueError("m must be at least 1")
    beta = np.linalg.norm(b)
    if beta == 0:
        raise ValueError("start vector must be nonzero")
    N = A.nrows
    V = np.empty((N, m), dtype=np.complex128)
    H = np.zeros((m + 1, m), dtype=np.complex128)
    V[:, 0] = b / beta
    v_next, w_next, breakdown = _advance(A, V, H, 0, m, mode, t, counters, None)
    if breakdown is not None:
        j = breakdown
        return ArnoldiFactorization(V=V[:, :j].copy(), H=H[: j + 1, :j].copy(),
                                    v_next=None, w_next=None, mode=mode, t=t,
                                    breakdown=j)
    return ArnoldiFactorization(V=V, H=H, v_next=v_next, w_next=w_next,
                                mode=mode, t=t)


def arnoldi_extend(fac, A, m_new, counters=None):
    """Extend a factorization to cycle length m_new (no-op at or below m)."""
    if fac.breakdown is not None or m_new <= fac.m:
        if m_new < fac.m and fac.breakdown is None:
            raise ValueError("cannot shrink a factorization")
        return fac
    m_old = fac.m
    N = fac.V.shape[0]
    V = np.empty((N, m_new), dtype=np.complex128)
    V[:, :m_old] = fac.V
    V[:, m_old] = fac.v_next
    H = np.zeros((m_new + 1, m_new), dtype=np.complex128)
    H[: m_old + 1, :m_old] = fac.H
    v_next, w_next, breakdown = _advance(A, V, H, m_old, m_new, fac.mode, fac.t,
                                         counters, fac.w_next)
    if breakdown is not None:
        j = breakdown
        return replace(fac, V=V[:, :j].copy(), H=H[: j + 1, :j].copy(),
                       v_next=None, w_next=None, breakdown=j)
    return replace(fac, V=V, H=H, v_next=v_next, w_next=w_next)
