"""Small dense kernels: pivoted Householder QR, minimal-norm solves,
spectral norm by power iteration and a Bland-rule simplex for weighted
l1 minimization.

Everything here is sized for stencil problems (tens of rows, at most a few
hundred columns); nothing is blocked or sparse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (DimensionMismatch, Inconsistent, Infeasible,
                     IterationLimit, SingularDiagonal, Unbounded)

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class PivotedQR:
    """Result of ``M[:, perm] = Q @ R`` with Householder reflectors.

    ``reflectors`` holds ``(v, tau)`` pairs; reflector ``k`` acts on rows
    ``k:`` as ``I - tau * v v^T``.
    """

    reflectors: tuple
    R: np.ndarray
    perm: np.ndarray
    rank: int
    rank_tol: float

    @property
    def shape(self):
        return self.R.shape

    @property
    def Q(self) -> np.ndarray:
        n = self.R.shape[0]
        return apply_q(self, np.eye(n))


def _householder(M, pivot=True):
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2:
        raise DimensionMismatch("expected a matrix")
    nrow, ncol = A.shape
    perm = np.arange(ncol)
    reflectors = []
    for k in range(min(nrow, ncol)):
        if pivot:
            norms = np.einsum("ij,ij->j", A[k:, k:], A[k:, k:])
            best = np.flatnonzero(norms == norms.max())
            # ties go to the lowest original column index
            p = k + best[np.argmin(perm[k + best])]
            if p != k:
                A[:, [k, p]] = A[:, [p, k]]
                perm[[k, p]] = perm[[p, k]]
        x = A[k:, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            reflectors.append((np.zeros_like(x), 0.0))
            continue
        alpha = -normx if x[0] >= 0 else normx
        v = x.copy()
        v[0] -= alpha
        tau = 2.0 / (v @ v)
        A[k:, k:] -= tau * np.outer(v, v @ A[k:, k:])
        A[k, k] = alpha
        A[k + 1:, k] = 0.0
        reflectors.append((v, tau))
    return tuple(reflectors), np.triu(A), perm


def _numerical_rank(R, rank_tol_rel):
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.count_nonzero(diag > rank_tol_rel * diag[0]))


def qr_col_pivot(M, rank_tol_rel: float = DEFAULT_RANK_TOL, rank=None) -> PivotedQR:
    """Householder QR with column pivoting.

    The numerical rank is the number of diagonal entries of ``R`` whose
    magnitude exceeds ``rank_tol_rel * |R[0, 0]|``, unless ``rank`` is
    given (e.g. known from an unscaled version of ``M``).
    """
    if not 0.0 < rank_tol_rel < 1.0:
        raise ValueError("rank_tol_rel must lie in (0, 1)")
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        raise DimensionMismatch("empty matrix")
    reflectors, R, perm = _householder(M, pivot=True)
    for a in (R, perm):
        a.setflags(write=False)
    if rank is None:
        rank = _numerical_rank(R, rank_tol_rel)
    return PivotedQR(reflectors, R, perm, int(rank), rank_tol_rel)


def apply_qt(fac: PivotedQR, b) -> np.ndarray:
    """Return ``Q^T b`` (``b`` may be a vector or a matrix with matching rows)."""
    out = np.array(b, dtype=float, copy=True)
    if out.shape[0] != fac.R.shape[0]:
        raise DimensionMismatch(f"b has {out.shape[0]} rows, Q has {fac.R.shape[0]}")
    for k, (v, tau) in enumerate(fac.reflectors):
        if tau:
            out[k:] -= tau * np.multiply.outer(v, v @ out[k:])
    return out


def apply_q(fac: PivotedQR, b) -> np.ndarray:
    out = np.array(b, dtype=float, copy=True)
    if out.shape[0] != fac.R.shape[0]:
        raise DimensionMismatch(f"b has {out.shape[0]} rows, Q has {fac.R.shape[0]}")
    for k in range(len(fac.reflectors) - 1, -1, -1):
        v, tau = fac.reflectors[k]
        if tau:
            out[k:] -= tau * np.multiply.outer(v, v @ out[k:])
    return out


def solve_upper_triangular(R1, c) -> np.ndarray:
    R1 = np.asarray(R1, dtype=float)
    c = np.asarray(c, dtype=float)
    if R1.shape[0] != R1.shape[1] or R1.shape[0] != c.shape[0]:
        raise DimensionMismatch(f"R1 {R1.shape} incompatible with rhs {c.shape}")
    if R1.shape[0] == 0:
        return np.zeros(c.shape)
    d = np.abs(np.diag(R1))
    if np.any(d <= 1e-300):
        raise SingularDiagonal(f"zero diagonal entry at position {int(np.argmin(d))}")
    return sla.solve_triangular(R1, c, lower=False)


def min_norm_solution(M, b, consist_tol_rel: float = 1e-8,
                      rank_tol_rel: float = DEFAULT_RANK_TOL, rank=None) -> np.ndarray:
    """Minimal Euclidean norm solution of ``M v = b``.

    Uses a complete orthogonal decomposition: pivoted QR of ``M`` truncated
    to its numerical rank ``r``, followed by a QR of the ``r`` leading rows
    of ``R`` transposed.  Raises :class:`Inconsistent` when the residual
    exceeds ``consist_tol_rel * ||b||``.  ``rank`` overrides the numerical
    rank decision.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if M.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"M has {M.shape[0]} rows, b has {b.shape[0]}")
    m = M.shape[1]
    v = np.zeros(m)
    if M.size:
        fac = qr_col_pivot(M, rank_tol_rel, rank)
        r = fac.rank
        if r:
            c = apply_qt(fac, b)[:r]
            refl, U, _ = _householder(fac.R[:r, :].T, pivot=False)
            # R[:r] = U^T Z^T with Z the first r columns of the second Q
            t = sla.solve_triangular(U[:r, :r], c, trans="T", lower=False)
            Zt = np.zeros(m)
            Zt[:r] = t
            for k in range(len(refl) - 1, -1, -1):
                vk, tau = refl[k]
                if tau:
                    Zt[k:] -= tau * vk * (vk @ Zt[k:])
            v[fac.perm] = Zt
    res = np.linalg.norm(M @ v - b) if M.size else np.linalg.norm(b)
    if res > consist_tol_rel * np.linalg.norm(b):
        raise Inconsistent(f"residual {res:.3e} exceeds tolerance")
    return v


def spectral_norm(M, maxiter: int = 500, tol: float = 1e-10) -> float:
    """Largest singular value by power iteration on the smaller Gram matrix."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    G = M.T @ M if M.shape[1] <= M.shape[0] else M @ M.T
    col = np.einsum("ij,ij->j", G, G)
    if col.max() == 0.0:
        return 0.0
    x = G[:, np.argmax(col)].copy()
    x /= np.linalg.norm(x)
    lam = x @ G @ x
    for _ in range(maxiter):
        y = G @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        lam_new = x @ G @ x
        if abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


# --------------------------------------------------------------------------
# simplex

_DEGENERATE_STREAK = 3


def _revised_simplex(Aeq, beq, c, basis, allowed, maxiter):
    """Minimize ``c @ x`` over ``Aeq x = beq, x >= 0`` from a feasible basis.

    The basis matrix is refactored every iteration.  Pricing is Dantzig's
    rule; after a short streak of degenerate pivots it switches to Bland's
    rule (lowest index enters, lowest index leaves among ties) until a
    pivot makes progress, which rules out cycling.
    """
    basis = list(basis)
    bland = False
    streak = 0
    colnorm = np.abs(Aeq).sum(axis=0)
    for _ in range(maxiter):
        B = Aeq[:, basis]
        xb = np.linalg.solve(B, beq)
        y = np.linalg.solve(B.T, c[basis])
        rc = c - Aeq.T @ y
        tol = 1e-11 * (np.abs(c) + colnorm * np.abs(y).max())
        cand = np.flatnonzero((rc < -tol) & allowed)
        cand = cand[~np.isin(cand, basis)]
        if cand.size == 0:
            return basis, xb
        e = cand[0] if bland else cand[np.argmin(rc[cand] / (1.0 + colnorm[cand]))]
        dcol = np.linalg.solve(B, Aeq[:, e])
        rows = np.flatnonzero(dcol > 1e-9 * np.abs(dcol).max())
        if rows.size == 0:
            raise Unbounded("objective unbounded below")
        ratios = np.maximum(xb[rows], 0.0) / dcol[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin + 1e-12 * max(1.0, rmin)]
        if bland:
            leave = ties[np.argmin([basis[i] for i in ties])]
        else:
            leave = ties[np.argmax(dcol[ties])]
        basis[leave] = e
        if rmin <= 1e-14:
            streak += 1
            bland = bland or streak >= _DEGENERATE_STREAK
        else:
            streak = 0
            bland = False
    raise IterationLimit(f"simplex exceeded {maxiter} pivots")


def lp_min_weighted_l1(A, b, costs, feas_tol: float = 1e-9,
                       rank_tol_rel: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Minimize ``sum costs_j |w_j|`` subject to ``A w = b``.

    Splits ``w = u - v`` with ``u, v >= 0`` and runs a dense primal simplex.
    The equality rows are first rotated by the pivoted QR of ``A`` so that
    numerically redundant rows drop out; the pivot columns give the
    starting basis.  The result is a basic solution with at most
    ``rank(A)`` nonzero entries.  Raises :class:`Infeasible` when no exact
    ``w`` exists.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    costs = np.asarray(costs, dtype=float)
    p, m = A.shape
    if b.shape != (p,) or costs.shape != (m,):
        raise DimensionMismatch("A, b, costs have incompatible shapes")
    if np.any(costs <= 0):
        raise ValueError("costs must be positive")
    bnorm = max(1.0, np.linalg.norm(b))
    if not np.any(b):
        return np.zeros(m)
    if A.size == 0:
        if np.linalg.norm(b) > feas_tol * bnorm:
            raise Infeasible("no columns to satisfy a nonzero right-hand side")
        return np.zeros(m)

    fac = qr_col_pivot(A, rank_tol_rel)
    r = fac.rank
    qb = apply_qt(fac, b)
    if np.linalg.norm(qb[r:]) > feas_tol * bnorm:
        raise Infeasible(f"equality constraints inconsistent, residual {np.linalg.norm(qb[r:]):.3e}")
    if r == 0:
        return np.zeros(m)
    Rr = np.zeros((r, m))
    Rr[:, fac.perm] = fac.R[:r]
    beq = qb[:r]

    # starting basis: pivot columns, signed so that the basic values are >= 0
    lead = fac.perm[:r]
    w0 = solve_upper_triangular(fac.R[:r, :r], beq)
    basis = [j if wj >= 0 else j + m for j, wj in zip(lead, w0)]

    Aeq = np.hstack([Rr, -Rr])
    c = np.concatenate([costs, costs])
    basis, xb = _revised_simplex(Aeq, beq, c, basis, np.ones(2 * m, dtype=bool), 10 * (m + p))

    x = np.zeros(2 * m)
    # degenerate (zero-level) basics are left at exactly zero
    support = [j for j, val in zip(basis, xb) if val > 1e-12 * max(1.0, np.abs(xb).max())]
    for cols in (support, basis):
        if not cols:
            continue
        x[:] = 0.0
        x[cols] = np.linalg.lstsq(Aeq[:, cols], beq, rcond=None)[0]
        if np.linalg.norm(Aeq @ x - beq) <= 1e-12 * bnorm:
            break
    return x[:m] - x[m:]
