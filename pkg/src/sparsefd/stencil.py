"""Numerical differentiation weights on scattered nodes.

Three kinds of formula ``D u(z) ~ sum_j w_j u(y_j)``, all exact on
polynomials of order ``q`` (total degree ``< q``):

* ``l2min``  -- minimizes ``sum_j w_j**2 * |y_j - z|**(2q)``
* ``l1min``  -- minimizes ``sum_j |w_j| * |y_j - z|**q`` (a linear program)
* ``sparse_qr`` -- sparse weights from a pivoted QR factorization of the
  distance-weighted collocation matrix; at most ``rank(A)`` nonzeros.

When the center itself is a node it is moved to position 0, the constant
polynomial is eliminated and the center weight is recovered afterwards
from ``c_0(z)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .basis import (DiffOperator, ScaledBasis, apply_operator_at_center,
                    eval_basis, make_scaled_basis)
from .errors import (DimensionMismatch, GrowthInfinite, Inconsistent,
                     Infeasible, NumericalBreakdown, OrderTooLow,
                     SingularDiagonal)

CENTER_TOL = 1e-12
DEFAULT_S_TOL = 1e-12
METHODS = ("l2min", "l1min", "sparse_qr")


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StencilProblem:
    """Center ``z``, deduplicated nodes ``Y`` (center first if present), order and operator.

    ``node_ids[k]`` is the index in the caller's node list of ``Y[k]``.
    """

    z: np.ndarray
    Y: np.ndarray
    q: int
    D: DiffOperator
    node_ids: np.ndarray
    has_center: bool
    basis: ScaledBasis

    @property
    def m(self) -> int:
        return len(self.Y)

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def h(self) -> float:
        return self.basis.h

    @property
    def dist(self) -> np.ndarray:
        return np.linalg.norm(self.Y - self.z, axis=1)

    @property
    def center_index(self):
        return 0 if self.has_center else None


@dataclass(frozen=True)
class WeightVector:
    """Nonzero weights of a formula.

    ``positions`` index into ``problem.Y``; ``indices`` are the caller's node
    ids.  Norms are in original length units.
    """

    positions: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    method: str
    norm1: float
    norm2: float

    def __len__(self):
        return len(self.weights)

    @property
    def entries(self):
        return list(zip(self.indices.tolist(), self.weights.tolist()))

    def dense(self, p: StencilProblem) -> np.ndarray:
        w = np.zeros(p.m)
        w[self.positions] = self.weights
        return w


@dataclass(frozen=True)
class QrSelectDiagnostics:
    rank: int
    s: int
    bound_factor: float
    selected: tuple
    used_center_branch: bool


@dataclass(frozen=True)
class CollocationSystem:
    """Exactness system in the scaled basis.

    With a center node, ``A``/``b``/``theta`` are the reduced system on
    nodes ``1..m-1`` and ``c0`` is the zero-order coefficient at ``z``.
    ``A_full`` and ``b_full`` are always the unreduced system.
    """

    A: np.ndarray
    b: np.ndarray
    theta: np.ndarray
    c0: float
    reduced: bool
    A_full: np.ndarray
    b_full: np.ndarray


def build_problem(z, Y_raw, q: int, D: DiffOperator) -> StencilProblem:
    z = np.asarray(z, dtype=float).ravel()
    Y_raw = np.asarray(Y_raw, dtype=float)
    if Y_raw.ndim == 1:
        Y_raw = Y_raw.reshape(-1, len(z)) if len(z) > 1 else Y_raw[:, None]
    if len(Y_raw) == 0:
        raise ValueError("empty set of influence")
    if Y_raw.shape[1] != len(z) or D.d != len(z):
        raise DimensionMismatch("center, nodes and operator disagree on dimension")
    if q <= D.order:
        raise OrderTooLow(f"q={q} must exceed operator order {D.order}")

    seen = {}
    for i, y in enumerate(Y_raw):
        seen.setdefault(tuple(y), i)
    ids = np.array(sorted(seen.values()), dtype=int)
    Y = Y_raw[ids]
    dist = np.linalg.norm(Y - z, axis=1)
    h = dist.max()
    if h == 0.0:
        make_scaled_basis(z, Y, q)  # raises AllNodesCoincide
    near = np.flatnonzero(dist <= CENTER_TOL * h)
    has_center = near.size > 0
    if has_center:
        order = np.concatenate([[near[0]], np.setdiff1d(np.arange(len(Y)), near)])
        Y, ids = Y[order], ids[order]
        Y[0] = z
    basis = make_scaled_basis(z, Y, q)
    return StencilProblem(_frozen(z), _frozen(Y), int(q), D, _frozen(ids), bool(has_center), basis)


def collocation_system(p: StencilProblem) -> CollocationSystem:
    A = eval_basis(p.basis, p.Y)
    b = apply_operator_at_center(p.D, p.basis)
    scaled = p.dist / p.h
    c0 = p.D.c0(p.z)
    if p.has_center:
        theta = scaled[1:] ** (-p.q)
        return CollocationSystem(A[1:, 1:], b[1:], theta, c0, True, A, b)
    return CollocationSystem(A, b, scaled ** (-p.q), c0, False, A, b)


def collocation_rank(sys: CollocationSystem, rank_tol_rel=linalg.DEFAULT_RANK_TOL) -> int:
    """Numerical rank of the (reduced) unweighted collocation matrix.

    The distance weighting leaves the rank unchanged but can spread column
    norms over many orders of magnitude, so the rank is decided on ``A``.
    """
    if sys.A.size == 0:
        return 0
    return linalg.qr_col_pivot(sys.A, rank_tol_rel).rank


def _restore_center(sys, w_red):
    if not sys.reduced:
        return w_red
    return np.concatenate([[sys.c0 - w_red.sum()], w_red])


def _make_weights(p, w, method, keep_center=False):
    mask = w != 0.0
    if keep_center and p.has_center:
        mask[0] = True
    pos = np.flatnonzero(mask)
    ww = w[pos]
    dq = p.dist[pos] ** p.q
    n1 = float(np.sum(np.abs(ww) * dq))
    n2 = float(np.sqrt(np.sum((ww * dq) ** 2)))
    return WeightVector(_frozen(pos), _frozen(p.node_ids[pos]), _frozen(ww), method, n1, n2)


def weights_l2(p: StencilProblem, rank_tol_rel=linalg.DEFAULT_RANK_TOL,
               consist_tol_rel=1e-8) -> WeightVector:
    """Weights minimizing the distance-weighted 2-norm."""
    sys = collocation_system(p)
    try:
        v = linalg.min_norm_solution(sys.A * sys.theta, sys.b, consist_tol_rel, rank_tol_rel,
                                     rank=collocation_rank(sys, rank_tol_rel))
    except Inconsistent as exc:
        raise GrowthInfinite(f"GROWTH_INFINITE: {exc}") from exc
    return _make_weights(p, _restore_center(sys, sys.theta * v), "l2min")


def weights_l1(p: StencilProblem) -> WeightVector:
    """Weights minimizing the distance-weighted 1-norm (basic LP solution)."""
    sys = collocation_system(p)
    try:
        w = linalg.lp_min_weighted_l1(sys.A, sys.b, 1.0 / sys.theta)
    except Infeasible as exc:
        raise GrowthInfinite(f"GROWTH_INFINITE: {exc}") from exc
    return _make_weights(p, _restore_center(sys, w), "l1min")


def weights_sparse_qr(p: StencilProblem, rank_tol_rel=linalg.DEFAULT_RANK_TOL,
                      s_tol_rel=DEFAULT_S_TOL):
    """Sparse weights by pivoted QR of the distance-weighted collocation matrix.

    Returns ``(WeightVector, QrSelectDiagnostics)``.  ``s_tol_rel`` decides
    which components of ``Q^T b`` count as nonzero; set it too small and
    rounding noise inflates ``s``.
    """
    sys = collocation_system(p)
    At = sys.A * sys.theta
    b = sys.b
    ncol = At.shape[1]
    thr = s_tol_rel * np.linalg.norm(b)
    v = np.zeros(ncol)
    bound_factor = 1.0
    r = s = 0
    if At.size == 0:
        if np.any(np.abs(b) > thr):
            raise GrowthInfinite("GROWTH_INFINITE: no nodes besides the center")
    else:
        fac = linalg.qr_col_pivot(At, rank_tol_rel, rank=collocation_rank(sys, rank_tol_rel))
        r = fac.rank
        c = linalg.apply_qt(fac, b)
        big = np.flatnonzero(np.abs(c) > thr)
        if np.any(big >= r):
            raise GrowthInfinite("GROWTH_INFINITE: Q^T b has significant components beyond the rank")
        s = int(big.max()) + 1 if big.size else 0
        R1 = fac.R[:s, :s]
        R2 = fac.R[:s, s:]
        try:
            vt = linalg.solve_upper_triangular(R1, c[:s])
            if s and R2.shape[1]:
                G = linalg.solve_upper_triangular(R1, R2)
                bound_factor = float(np.sqrt(1.0 + linalg.spectral_norm(G) ** 2))
        except SingularDiagonal as exc:
            raise NumericalBreakdown(f"leading {s}x{s} block of R is singular; "
                                     f"try a larger s_tol_rel ({exc})") from exc
        v[fac.perm[:s]] = vt
    w = _restore_center(sys, sys.theta * v)
    wv = _make_weights(p, w, "sparse_qr", keep_center=True)
    diag = QrSelectDiagnostics(r + int(sys.reduced), s, bound_factor,
                               tuple(wv.indices.tolist()), sys.reduced)
    return wv, diag


def compute_weights(p: StencilProblem, method: str, **kw) -> WeightVector:
    if method == "l2min":
        return weights_l2(p, **kw)
    if method == "l1min":
        return weights_l1(p)
    if method == "sparse_qr":
        return weights_sparse_qr(p, **kw)[0]
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def weighted_norms(w: WeightVector, p: StencilProblem):
    """``(||w||_{1,q}, ||w||_{2,q})`` in original units."""
    if len(w) == 0:
        return 0.0, 0.0
    dq = p.dist[w.positions] ** p.q
    return float(np.sum(np.abs(w.weights) * dq)), float(np.sqrt(np.sum((w.weights * dq) ** 2)))


def growth_function(p: StencilProblem) -> float:
    """Growth function value, the optimal weighted 1-norm of exact weights."""
    return weights_l1(p).norm1


def growth_bounds(p: StencilProblem):
    """Lower and upper bounds on the growth function from the l2-minimal weights."""
    n2 = weights_l2(p).norm2
    return n2, float(np.sqrt(p.m)) * n2


def verify_exactness(w, p: StencilProblem) -> float:
    """Largest relative violation of the exactness conditions in the scaled basis.

    ``w`` is a :class:`WeightVector` or a dense vector over ``p.Y``.
    """
    dense = w.dense(p) if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    sys = collocation_system(p)
    return float(np.max(np.abs(sys.A_full @ dense - sys.b_full) / (1.0 + np.abs(sys.b_full))))


def error_bound_value(w: WeightVector, p: StencilProblem) -> float:
    """f-independent factor of the consistency error bound."""
    return weighted_norms(w, p)[0]


def apply_weights(w: WeightVector, p: StencilProblem, f) -> float:
    """``sum_j w_j f(y_j)`` for a callable ``f`` taking a point."""
    return float(sum(wj * f(p.Y[k]) for k, wj in zip(w.positions, w.weights)))
