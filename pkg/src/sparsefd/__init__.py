"""Sparse, provably accurate numerical differentiation stencils on scattered nodes."""
from .basis import (DiffOperator, ScaledBasis, apply_operator_at_center, dim_poly,
                    eval_basis, eval_basis_at, graded_monomial_indices, identity,
                    laplacian, make_scaled_basis, partial)
from .errors import (AllNodesCoincide, GrowthInfinite, NumericalBreakdown,
                     OrderTooLow, StencilError)
from .nodes import NodeSet, gen_halton, gen_unit_square, knn, read_nodes, write_nodes
from .pde import assemble_poisson, convergence_study, error_norms, solve_system
from .stencil import (StencilProblem, WeightVector, build_problem, collocation_system,
                      error_bound_value, growth_bounds, growth_function,
                      verify_exactness, weighted_norms, weights_l1, weights_l2,
                      weights_sparse_qr)

__version__ = "0.1.0"
