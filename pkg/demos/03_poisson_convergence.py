"""
Meshless finite differences for the Poisson equation
====================================================

Solve Laplace u = f on the unit square with u = sin(pi x) sin(pi y) on
jittered grids and watch the error fall at second order.
"""

import numpy as np

from sparsefd import assemble_poisson, convergence_study, gen_unit_square
from sparsefd.pde import sinsin_rhs

# Each interior node gets its own formula from its 20 nearest neighbors.
X = gen_unit_square(21, perturbation=0.2, seed=0)
for method in ("l2min", "sparse_qr"):
    S = assemble_poisson(X, method, q=4, m_neighbors=20, f=sinsin_rhs)
    nnz = S.row_nnz()[X.interior]
    print(f"{method:10s} mean nonzeros per interior row: {nnz.mean():5.2f}")

# Error against the exact solution on three grid levels.
print("\n   n        h      max error   rms error   order")
for row in convergence_study([11, 21, 41], perturbation=0.2, method="sparse_qr",
                             q=4, m_neighbors=20):
    order = f"{row['order']:.2f}" if np.isfinite(row["order"]) else "-"
    print(f"{row['n']:4d}  {row['h']:.4f}  {row['max_err']:.3e}   {row['rms_err']:.3e}   {order}")
