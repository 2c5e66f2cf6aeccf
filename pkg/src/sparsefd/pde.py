"""Meshless finite difference solver for the Poisson-Dirichlet problem

    Laplace(u) = f in the domain,   u = g on the boundary,

with one numerical differentiation formula per interior node computed on
its ``m`` nearest neighbors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import dim_poly, laplacian
from .errors import GrowthInfinite, OrderTooLow, SolveFailed
from .nodes import GridIndex, NodeSet, gen_unit_square
from .stencil import build_problem, compute_weights

DIRECT_SOLVE_MAX_N = 2000


@dataclass(frozen=True)
class SparseSystem:
    """Triplet form of the global system; rows are sorted, columns sorted within a row."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    N: int
    rhs: np.ndarray

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.N, self.N))

    def row_nnz(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.N)


def default_neighbors(q: int, d: int) -> int:
    return 2 * dim_poly(d, q)


def assemble_poisson(X: NodeSet, method: str = "sparse_qr", q: int = 4,
                     m_neighbors: int | None = None, f=None, g=None,
                     retry: bool = False, **weight_kw) -> SparseSystem:
    """Assemble the discrete Poisson-Dirichlet system.

    ``f`` and ``g`` take a point and return a float (default zero).  A node
    whose neighborhood admits no exact formula raises
    :class:`GrowthInfinite` carrying the node index; with ``retry=True``
    the neighborhood of that node is doubled once first.
    """
    d = X.d
    if q < 3:
        raise OrderTooLow(f"q={q} must exceed 2 for the Laplacian")
    # m below dim_poly(d, q) is allowed: symmetric neighborhoods (e.g. 3x3
    # grid blocks) can still be exact; otherwise GrowthInfinite surfaces
    m = default_neighbors(q, d) if m_neighbors is None else m_neighbors
    if m < 1:
        raise ValueError("m_neighbors must be positive")
    m = min(m, len(X))
    f = f or (lambda x: 0.0)
    g = g or (lambda x: 0.0)
    lap = laplacian(d)
    index = GridIndex(X.points)

    rows, cols, vals = [], [], []
    rhs = np.zeros(len(X))
    for i, x in enumerate(X.points):
        if X.boundary[i]:
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
            rhs[i] = g(x)
            continue
        ks = [m, min(2 * m, len(X))] if retry else [m]
        for attempt, k in enumerate(ks):
            nbr = index.query(x, k)
            try:
                w = compute_weights(build_problem(x, X.points[nbr], q, lap), method, **weight_kw)
                break
            except GrowthInfinite as exc:
                if attempt == len(ks) - 1:
                    raise GrowthInfinite(f"GROWTH_INFINITE at node {i}", node=i) from exc
        glob = nbr[w.indices]
        order = np.argsort(glob)
        rows.extend([i] * len(glob))
        cols.extend(glob[order].tolist())
        vals.extend(w.weights[order].tolist())
        rhs[i] = f(x)
    return SparseSystem(np.array(rows, dtype=int), np.array(cols, dtype=int),
                        np.array(vals), len(X), rhs)


def solve_system(S: SparseSystem, rel_tol: float = 1e-10) -> np.ndarray:
    """Solve the assembled system, guaranteeing ``||A u - rhs|| <= rel_tol ||rhs||``."""
    A = S.to_csr()
    bnorm = np.linalg.norm(S.rhs)
    if S.N <= DIRECT_SOLVE_MAX_N:
        u = spla.spsolve(A.tocsc(), S.rhs)
    else:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)
        u, _ = spla.gmres(A, S.rhs, M=M, rtol=0.1 * rel_tol, restart=50, maxiter=200)
    u = np.atleast_1d(u)
    res = np.linalg.norm(A @ u - S.rhs)
    if not np.all(np.isfinite(u)) or res > rel_tol * bnorm:
        raise SolveFailed(f"residual {res:.3e} exceeds {rel_tol:g} * ||rhs||", residual=res)
    return u


def error_norms(u_hat, u_exact, X: NodeSet):
    """Max and RMS nodal error against a callable exact solution."""
    exact = np.array([u_exact(x) for x in X.points])
    err = np.abs(np.asarray(u_hat) - exact)
    return float(err.max()), float(np.sqrt(np.mean(err ** 2)))


# manufactured problem on the unit square

def sinsin(x):
    return np.sin(np.pi * x[0]) * np.sin(np.pi * x[1])


def sinsin_rhs(x):
    return -2.0 * np.pi ** 2 * sinsin(x)


def convergence_study(levels, perturbation: float = 0.0, method: str = "sparse_qr",
                      q: int = 4, m_neighbors: int | None = None, seed: int = 0,
                      **weight_kw):
    """Solve the sin*sin problem on each grid level.

    Returns a list of dicts with keys ``n``, ``h``, ``max_err``, ``rms_err``
    and ``order`` (observed order from the max error against the previous
    level, ``nan`` on the first).
    """
    levels = list(levels)
    if len(levels) < 2:
        raise ValueError("a convergence study needs at least two levels")
    table = []
    for n in levels:
        X = gen_unit_square(n, perturbation, seed)
        S = assemble_poisson(X, method, q, m_neighbors, f=sinsin_rhs, **weight_kw)
        u = solve_system(S)
        emax, erms = error_norms(u, sinsin, X)
        h = 1.0 / (n - 1)
        order = float("nan")
        if table:
            prev = table[-1]
            order = float(np.log(prev["max_err"] / emax) / np.log(prev["h"] / h))
        table.append(dict(n=n, h=h, max_err=emax, rms_err=erms, order=order))
    return table


# dump formats

def write_triplets(path, S: SparseSystem):
    """One ``i j w`` line per nonzero, 1-based, row-major."""
    order = np.lexsort((S.cols, S.rows))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{S.rows[k] + 1} {S.cols[k] + 1} {float(S.vals[k])!r}\n")


def write_rhs(path, S: SparseSystem):
    with open(path, "w") as fh:
        for v in S.rhs:
            fh.write(f"{float(v)!r}\n")


def read_system(triplet_path, rhs_path) -> SparseSystem:
    t = np.loadtxt(triplet_path, ndmin=2)
    rhs = np.loadtxt(rhs_path, ndmin=1)
    return SparseSystem(t[:, 0].astype(int) - 1, t[:, 1].astype(int) - 1, t[:, 2], len(rhs), rhs)
