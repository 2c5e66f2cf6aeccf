"""
The growth function as a quality measure
========================================

rho(z, Y) is the smallest weighted l1 norm of an exact formula.  It bounds
the consistency error for any smooth u, shrinks when nodes are added and
becomes infinite when Y cannot support an exact formula.
"""

import numpy as np

from sparsefd import GrowthInfinite, build_problem, laplacian
from sparsefd.stencil import growth_bounds, growth_function

rng = np.random.default_rng(7)
z = np.zeros(2)
q = 4

# More nodes can only help: rho never increases along a nested family.
Y = rng.uniform(-1, 1, size=(60, 2))
print("nodes   rho        l2 lower   l2 upper")
for m in (12, 20, 30, 45, 60):
    p = build_problem(z, Y[:m], q, laplacian(2))
    lo, hi = growth_bounds(p)
    print(f"{m:5d}   {growth_function(p):.4e} {lo:.4e} {hi:.4e}")

# Shrinking the cloud by a factor lam multiplies rho by lam^(q-2).
p = build_problem(z, Y[:30], q, laplacian(2))
ps = build_problem(z, 0.5 * Y[:30], q, laplacian(2))
print(f"\nhalving the cloud: rho ratio {growth_function(ps) / growth_function(p):.6f} "
      f"(expected {0.5 ** (q - 2)})")

# Nodes on a single line carry no information about d^2/dy^2.
line = np.column_stack([np.linspace(-1, 1, 9), np.zeros(9)])
try:
    growth_function(build_problem(z, line, q, laplacian(2)))
except GrowthInfinite as exc:
    print(f"\ncollinear nodes: {exc}")
