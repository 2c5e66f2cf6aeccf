"""Node sets, simple generators and nearest-neighbor queries.

Node file format (ASCII, whitespace separated)::

    d N
    x_1 ... x_d flag      # N lines, flag 0 = interior, 1 = boundary
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from .errors import KTooLarge

DEDUP_TOL = 1e-14
HALTON_BASES = (2, 3, 5, 7)


@dataclass(frozen=True)
class NodeSet:
    points: np.ndarray
    boundary: np.ndarray

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)


def make_nodeset(points, boundary=None) -> NodeSet:
    """Build a NodeSet, dropping points closer than 1e-14 to an earlier one."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    flags = np.zeros(len(pts), dtype=bool) if boundary is None else np.asarray(boundary, dtype=bool)
    if len(pts) > 1:
        drop = {j for _, j in cKDTree(pts).query_pairs(DEDUP_TOL)}
        if drop:
            keep = np.setdiff1d(np.arange(len(pts)), sorted(drop))
            pts, flags = pts[keep], flags[keep]
    pts = pts.copy()
    flags = flags.copy()
    pts.setflags(write=False)
    flags.setflags(write=False)
    return NodeSet(pts, flags)


def gen_unit_square(n_per_side: int, perturbation: float = 0.0, seed: int = 0) -> NodeSet:
    """Tensor grid on [0,1]^2 with interior nodes jittered by up to ``perturbation*h``."""
    if n_per_side < 3:
        raise ValueError("n_per_side must be at least 3")
    if not 0.0 <= perturbation < 0.5:
        raise ValueError("perturbation must lie in [0, 0.5)")
    h = 1.0 / (n_per_side - 1)
    t = np.linspace(0.0, 1.0, n_per_side)
    X, Yg = np.meshgrid(t, t, indexing="xy")
    pts = np.column_stack([X.ravel(), Yg.ravel()])
    i, j = np.meshgrid(np.arange(n_per_side), np.arange(n_per_side), indexing="xy")
    bnd = ((i == 0) | (j == 0) | (i == n_per_side - 1) | (j == n_per_side - 1)).ravel()
    if perturbation > 0:
        rng = np.random.default_rng(seed)
        shift = rng.uniform(-perturbation * h, perturbation * h, size=pts.shape)
        pts[~bnd] += shift[~bnd]
    return make_nodeset(pts, bnd)


def radical_inverse(i: int, base: int) -> float:
    f, out = 1.0, 0.0
    while i > 0:
        f /= base
        out += f * (i % base)
        i //= base
    return out


def gen_halton(N: int, d: int) -> NodeSet:
    """First N points of the Halton sequence (index starting at 1) in [0,1]^d."""
    if N < 1 or not 1 <= d <= len(HALTON_BASES):
        raise ValueError("need N >= 1 and 1 <= d <= 4")
    pts = [[radical_inverse(i, b) for b in HALTON_BASES[:d]] for i in range(1, N + 1)]
    return make_nodeset(pts)


def knn_brute(X: NodeSet, x, k: int) -> np.ndarray:
    pts = X.points if isinstance(X, NodeSet) else np.asarray(X, dtype=float)
    if not 1 <= k <= len(pts):
        raise KTooLarge(f"k={k} not in [1, {len(pts)}]")
    d2 = ((pts - np.asarray(x, dtype=float)) ** 2).sum(axis=1)
    return np.lexsort((np.arange(len(pts)), d2))[:k]


class GridIndex:
    """Uniform bucket grid over the bounding box of a point cloud.

    Cell size is the box extent divided by ``N**(1/d)`` per axis.  Queries
    search growing shells of cells and return exactly what
    :func:`knn_brute` returns, including tie order.
    """

    def __init__(self, points):
        self.points = np.asarray(points, dtype=float)
        n, d = self.points.shape
        self.lo = self.points.min(axis=0)
        extent = self.points.max(axis=0) - self.lo
        per_axis = max(1, int(round(n ** (1.0 / d))))
        self.shape = np.where(extent > 0, per_axis, 1)
        self.cell = np.where(extent > 0, extent / self.shape, 1.0)
        cells = self._cell_of(self.points)
        self.buckets = {}
        for i, c in enumerate(map(tuple, cells)):
            self.buckets.setdefault(c, []).append(i)

    def _cell_of(self, x):
        c = np.floor((np.asarray(x) - self.lo) / self.cell).astype(int)
        return np.clip(c, 0, self.shape - 1)

    def query(self, x, k: int) -> np.ndarray:
        n, d = self.points.shape
        if not 1 <= k <= n:
            raise KTooLarge(f"k={k} not in [1, {n}]")
        x = np.asarray(x, dtype=float)
        c0 = self._cell_of(x)
        cand = []
        r = 0
        while True:
            lo = np.maximum(c0 - r, 0)
            hi = np.minimum(c0 + r, self.shape - 1)
            for c in product(*(range(a, b + 1) for a, b in zip(lo, hi))):
                if r and np.all(np.abs(np.array(c) - c0) < r):
                    continue  # inner cells were visited on earlier shells
                cand.extend(self.buckets.get(c, ()))
            full = np.all(lo == 0) and np.all(hi == self.shape - 1)
            if len(cand) >= k or full:
                idx = np.array(cand)
                d2 = ((self.points[idx] - x) ** 2).sum(axis=1)
                order = np.lexsort((idx, d2))
                if full:
                    return idx[order[:k]]
                # distance from x to the nearest unvisited cell
                gap_lo = np.where(lo > 0, x - (self.lo + lo * self.cell), np.inf)
                gap_hi = np.where(hi < self.shape - 1, self.lo + (hi + 1) * self.cell - x, np.inf)
                reach = min(gap_lo.min(), gap_hi.min())
                # shrink slightly so rounding in the cell assignment cannot matter
                if d2[order[k - 1]] < (reach * (1.0 - 1e-9)) ** 2:
                    return idx[order[:k]]
            r += 1


def knn(X: NodeSet, x, k: int, index: GridIndex | None = None) -> np.ndarray:
    """Indices of the k nearest nodes, ascending distance, ties by index."""
    if index is None:
        index = GridIndex(X.points)
    return index.query(x, k)


def read_nodes(path) -> NodeSet:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'd N' header")
    d, n = int(tokens[0]), int(tokens[1])
    body = tokens[2:]
    if len(body) != n * (d + 1):
        raise ValueError(f"{path}: expected {n} rows of {d + 1} values, got {len(body)} values")
    rows = np.array(body, dtype=float).reshape(n, d + 1)
    flags = rows[:, d]
    if not np.all((flags == 0) | (flags == 1)):
        raise ValueError(f"{path}: boundary flags must be 0 or 1")
    return make_nodeset(rows[:, :d], flags == 1)


def write_nodes(path, X: NodeSet):
    with open(path, "w") as fh:
        fh.write(f"{X.d} {len(X)}\n")
        for x, b in zip(X.points, X.boundary):
            fh.write(" ".join(repr(float(v)) for v in x) + f" {int(b)}\n")
