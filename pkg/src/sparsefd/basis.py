"""Multi-indices, differential operators and the shifted/scaled monomial basis.

Basis polynomials are ``p_alpha(x) = ((x - z) / h) ** alpha`` for all
multi-indices with ``|alpha| < q``, ordered by grade and, within a grade,
by descending lexicographic order of the exponents.  The constant comes
first and every other basis polynomial vanishes at the center ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial
from typing import Callable, Mapping, Union

import numpy as np

from .errors import AllNodesCoincide

MultiIndex = tuple  # tuple of non-negative ints
Coefficient = Union[float, Callable[[np.ndarray], float]]

MAX_FACTORIAL_ORDER = 20


def _compositions(total, d):
    """All d-tuples of non-negative ints summing to ``total``, descending lex."""
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


def graded_monomial_indices(d: int, q: int) -> list:
    """Multi-indices ``alpha`` in ``Z_+^d`` with ``|alpha| < q``, graded lex order."""
    if d < 1 or q < 0:
        raise ValueError(f"need d >= 1 and q >= 0, got d={d}, q={q}")
    return [a for g in range(q) for a in _compositions(g, d)]


def dim_poly(d: int, q: int) -> int:
    """Dimension of the space of d-variate polynomials of total degree < q."""
    if q <= 0:
        return 0
    return comb(q - 1 + d, d)


def multi_factorial(alpha) -> int:
    if sum(alpha) > MAX_FACTORIAL_ORDER:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds supported order {MAX_FACTORIAL_ORDER}")
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


@dataclass(frozen=True)
class DiffOperator:
    """Linear differential operator ``D u = sum_beta c_beta * d^beta u``.

    ``terms`` maps multi-indices to coefficients, each either a constant or
    a callable evaluated at a point.
    """

    d: int
    terms: Mapping[tuple, Coefficient] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        for beta in self.terms:
            if len(beta) != self.d or any(b < 0 for b in beta):
                raise ValueError(f"invalid multi-index {beta} for d={self.d}")

    @property
    def order(self) -> int:
        return max((sum(beta) for beta in self.terms), default=0)

    def coefficient(self, beta, z) -> float:
        c = self.terms.get(tuple(beta), 0.0)
        return float(c(np.asarray(z, dtype=float))) if callable(c) else float(c)

    def c0(self, z) -> float:
        """Coefficient of the zero-order term at ``z``."""
        return self.coefficient((0,) * self.d, z)

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        if other.d != self.d:
            raise ValueError("operators act in different dimensions")
        terms = dict(self.terms)
        for beta, c in other.terms.items():
            if beta not in terms:
                terms[beta] = c
            elif callable(c) or callable(terms[beta]):
                c1 = terms[beta]
                terms[beta] = (lambda x, a=c1, b=c: _eval(a, x) + _eval(b, x))
            else:
                terms[beta] = terms[beta] + c
        name = f"{self.name}+{other.name}" if self.name and other.name else ""
        return DiffOperator(self.d, terms, name)

    def apply_to_polynomial(self, coeffs: Mapping[tuple, float], x) -> float:
        """Evaluate ``D p`` at ``x`` for ``p = sum coeffs[alpha] * x**alpha`` (unshifted)."""
        x = np.asarray(x, dtype=float)
        total = 0.0
        for beta in self.terms:
            cb = self.coefficient(beta, x)
            for alpha, ca in coeffs.items():
                if any(a < b for a, b in zip(alpha, beta)):
                    continue
                k = 1.0
                for a, b, xi in zip(alpha, beta, x):
                    k *= factorial(a) / factorial(a - b) * xi ** (a - b)
                total += cb * ca * k
        return total


def _eval(c, x):
    return c(x) if callable(c) else c


def laplacian(d: int) -> DiffOperator:
    terms = {}
    for i in range(d):
        beta = [0] * d
        beta[i] = 2
        terms[tuple(beta)] = 1.0
    return DiffOperator(d, terms, "laplace")


def partial(d: int, axis: int, k: int = 1) -> DiffOperator:
    beta = [0] * d
    beta[axis] = k
    return DiffOperator(d, {tuple(beta): 1.0}, f"d{axis}^{k}")


def identity(d: int) -> DiffOperator:
    return DiffOperator(d, {(0,) * d: 1.0}, "identity")


@dataclass(frozen=True)
class ScaledBasis:
    center: np.ndarray
    h: float
    indices: tuple

    @property
    def d(self) -> int:
        return len(self.center)

    def __len__(self):
        return len(self.indices)

    def exponents(self) -> np.ndarray:
        return np.array(self.indices, dtype=int).reshape(len(self.indices), self.d)


def make_scaled_basis(z, Y, q: int) -> ScaledBasis:
    """Basis centered at ``z`` and scaled by the largest node distance."""
    z = np.asarray(z, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.size == 0:
        raise ValueError("empty node set")
    h = float(np.max(np.linalg.norm(Y - z, axis=1)))
    if h == 0.0:
        raise AllNodesCoincide("all nodes coincide with the center")
    center = z.copy()
    center.setflags(write=False)
    return ScaledBasis(center, h, tuple(graded_monomial_indices(len(z), q)))


def eval_basis(basis: ScaledBasis, Y) -> np.ndarray:
    """Collocation matrix ``[p_i(y_j)]`` of shape ``(nu, m)``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    X = (Y - basis.center) / basis.h  # (m, d)
    E = basis.exponents()  # (nu, d)
    out = np.ones((len(E), len(X)))
    for k in range(basis.d):
        out *= X[:, k][None, :] ** E[:, k][:, None]
    return out


def eval_basis_at(basis: ScaledBasis, y) -> np.ndarray:
    return eval_basis(basis, np.asarray(y, dtype=float)[None, :])[:, 0]


def apply_operator_at_center(D: DiffOperator, basis: ScaledBasis) -> np.ndarray:
    """Vector ``b_i = (D p_i)(z)``.

    Only the term with ``beta == alpha_i`` survives at the center, giving
    ``c_alpha(z) * alpha! * h**(-|alpha|)``.
    """
    b = np.zeros(len(basis))
    for i, alpha in enumerate(basis.indices):
        if alpha in D.terms:
            c = D.coefficient(alpha, basis.center)
            b[i] = c * multi_factorial(alpha) * basis.h ** (-sum(alpha))
    return b
