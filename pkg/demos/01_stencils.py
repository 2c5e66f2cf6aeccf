"""
Differentiation formulas on scattered nodes
===========================================

Three ways to pick weights w_j with  Laplace u(z) ~ sum_j w_j u(y_j),
all exact on polynomials of degree < q.
"""

import numpy as np

from sparsefd import build_problem, laplacian, verify_exactness
from sparsefd.stencil import weights_l1, weights_l2, weights_sparse_qr

np.set_printoptions(precision=4, suppress=True)

# On a 3x3 grid block the weighted l1-minimal formula finds the
# classical 5-point star by itself: the diagonal neighbors get weight 0.
h = 0.1
grid = h * np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
p = build_problem([0.0, 0.0], grid, 4, laplacian(2))
w = weights_l1(p)
print("3x3 grid, l1-minimal weights times h^2:")
for i, wi in w.entries:
    print(f"  node {i} at {grid[i]}: {wi * h ** 2:+.6f}")

# On a random cloud the l2-minimal formula uses every node, while the
# pivoted-QR selection keeps at most dim(polynomials) = 10 of them.
rng = np.random.default_rng(1)
cloud = rng.uniform(-0.2, 0.2, size=(30, 2))
p = build_problem([0.0, 0.0], cloud, 4, laplacian(2))
w2 = weights_l2(p)
wqr, diag = weights_sparse_qr(p)
print("\n30 random nodes, q = 4")
print(f"  l2-minimal: {len(w2)} nonzeros, ||w||_2,q = {w2.norm2:.4g}")
print(f"  sparse QR : {len(wqr)} nonzeros, ||w||_2,q = {wqr.norm2:.4g}, "
      f"rank {diag.rank}, bound factor {diag.bound_factor:.3g}")

# The sparse formula never loses more than the bound factor in the
# weighted 2-norm, and both formulas are exact to rounding.
print(f"  ratio {wqr.norm2 / w2.norm2:.3f} <= bound factor {diag.bound_factor:.3f}")
print(f"  exactness residuals: {verify_exactness(w2, p):.1e}, {verify_exactness(wqr, p):.1e}")

# Test on a smooth function: u = exp(x) cos(y) is harmonic.
u = lambda x: np.exp(x[0]) * np.cos(x[1])
for name, ww in (("l2", w2), ("qr", wqr)):
    approx = sum(wi * u(p.Y[k]) for k, wi in zip(ww.positions, ww.weights))
    print(f"  {name}: Laplace u(0) ~ {approx:+.2e} (exact 0)")
