"""Acceptance criteria 1-12.

Each test records a one-line verdict that the terminal summary prints as
``[PASS]/[FAIL] criterion N: ...``.  Run on its own with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import itertools
import time

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import ACCEPTANCE_RESULTS, random_ball, random_stencil_setup
from sparsefd.basis import dim_poly, laplacian
from sparsefd.errors import GrowthInfinite, Infeasible
from sparsefd.linalg import apply_qt, qr_col_pivot
from sparsefd.nodes import gen_unit_square
from sparsefd.pde import (assemble_poisson, convergence_study, sinsin,
                          sinsin_rhs, solve_system)
from sparsefd.stencil import (METHODS, apply_weights, build_problem,
                              collocation_rank, collocation_system,
                              compute_weights, growth_bounds, growth_function,
                              verify_exactness, weights_l1, weights_l2,
                              weights_sparse_qr)

SEED = 31415


def record(key, ok, msg):
    ACCEPTANCE_RESULTS[key] = (bool(ok), msg)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {msg}")
    assert ok, msg


@pytest.fixture(scope="module")
def sweep():
    """500 random problems solved by all three methods."""
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    trials = []
    for _ in range(500):
        z, Y, q, D = random_stencil_setup(rng)
        p = build_problem(z, Y, q, D)
        res = {}
        for method in METHODS:
            w = compute_weights(p, method)
            res[method] = verify_exactness(w, p)
        wqr, diag = weights_sparse_qr(p)
        trials.append(dict(p=p, res=res, wqr=wqr, diag=diag, w2=weights_l2(p)))
    return trials, time.perf_counter() - t0


@pytest.fixture(scope="module")
def trials_2d():
    """100 two-dimensional q=4 problems with their sparse-QR selections."""
    rng = np.random.default_rng(SEED + 1)
    out = []
    for _ in range(100):
        z, Y, q, D = random_stencil_setup(rng, d=2, q=4)
        p = build_problem(z, Y, q, D)
        wqr, diag = weights_sparse_qr(p)
        Ysel = p.Y[wqr.positions]
        if np.all(Ysel == p.z):
            # the center alone: every weighted norm vanishes
            rho_sel, bounds_sel = 0.0, (0.0, 0.0)
        else:
            sel = build_problem(z, Ysel, q, D)
            rho_sel, bounds_sel = growth_function(sel), growth_bounds(sel)
        out.append(dict(p=p, wqr=wqr, diag=diag, rho=growth_function(p), rho_sel=rho_sel,
                        bounds=growth_bounds(p), bounds_sel=bounds_sel))
    return out


def test_criterion_01_exactness_sweep(sweep):
    trials, elapsed = sweep
    worst = {m: max(t["res"][m] for t in trials) for m in METHODS}
    ok = all(v <= 1e-9 for v in worst.values()) and elapsed < 30
    record(1, ok, f"500 problems x 3 methods, worst residual "
                  + ", ".join(f"{m}={v:.1e}" for m, v in worst.items())
                  + f" (<= 1e-9), {elapsed:.1f}s (< 30s)")


def test_criterion_02_l2_bound(sweep):
    trials, _ = sweep
    worst = 0.0
    for t in trials:
        n2 = t["w2"].norm2
        excess = t["wqr"].norm2 - (t["diag"].bound_factor * n2 + 1e-8 * n2)
        worst = max(worst, excess / max(n2, 1e-300))
    record(2, worst <= 0, f"{len(trials)} trials, max relative excess over the bound {worst:.2e} (<= 0)")


def test_criterion_03_growth_bound(trials_2d):
    worst = -np.inf
    for t in trials_2d:
        n = len(t["wqr"])
        rhs = np.sqrt(n) * t["diag"].bound_factor * t["rho"] + 1e-8 * t["rho"]
        worst = max(worst, (t["rho_sel"] - rhs) / max(t["rho"], 1e-300))
    record(3, worst <= 0, f"100 2D q=4 trials, max relative excess {worst:.2e} (<= 0)")


def test_criterion_04_sparsity(sweep, trials_2d):
    trials, _ = sweep
    bad = 0
    for t in trials + trials_2d:
        p, w, diag = t["p"], t["wqr"], t["diag"]
        r = collocation_rank(collocation_system(p)) + int(p.has_center)
        if not (len(w) <= r == diag.rank <= dim_poly(p.d, p.q)):
            bad += 1
    h = 0.1
    grid = h * np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
    pg = build_problem([0, 0], grid, 4, laplacian(2))
    wg, _ = weights_sparse_qr(pg)
    res = verify_exactness(wg, pg)
    ok = bad == 0 and len(wg) <= 9 and res <= 1e-10
    record(4, ok, f"{len(trials) + len(trials_2d)} trials with |Y'| <= r <= nu violated {bad} times; "
                  f"3x3 grid nnz={len(wg)} (<= 9), residual {res:.1e}")


def test_criterion_05_sandwich(trials_2d):
    worst = -np.inf
    for t in trials_2d:
        for rho, (lo, hi) in ((t["rho"], t["bounds"]), (t["rho_sel"], t["bounds_sel"])):
            worst = max(worst, lo - 1e-8 - rho, rho - (hi + 1e-8))
    record(5, worst <= 0, f"200 sets (full and selected), max violation {worst:.2e} (<= 0)")


def _enumerate_min_l1(p):
    """Smallest weighted l1 norm over exact solutions supported on rank-sized column subsets."""
    sys = collocation_system(p)
    A, b = sys.A_full, sys.b_full
    costs = p.dist ** p.q
    r = np.linalg.matrix_rank(A)
    best = np.inf
    for cols in itertools.combinations(range(p.m), r):
        sub = A[:, cols]
        w = np.linalg.lstsq(sub, b, rcond=None)[0]
        if np.max(np.abs(sub @ w - b) / (1 + np.abs(b))) <= 1e-10:
            best = min(best, float(np.sum(costs[list(cols)] * np.abs(w))))
    return best


def test_criterion_06_l1_optimality():
    rng = np.random.default_rng(SEED + 2)
    shapes = [(1, 2), (1, 3), (1, 4), (1, 5), (2, 2), (2, 3), (3, 2)]
    worst = -np.inf
    count = 0
    while count < 50:
        d, q = shapes[count % len(shapes)]
        z, Y, q, D = random_stencil_setup(rng, d=d, q=q)
        if len(Y) > 10:
            continue
        p = build_problem(z, Y, q, D)
        lp = weights_l1(p).norm1
        best = _enumerate_min_l1(p)
        worst = max(worst, (lp - best) / max(lp, 1e-300) - 1e-9)
        count += 1
    record(6, worst <= 0, f"50 instances with m <= 10, enumeration beats the LP by at most "
                          f"{worst + 1e-9:.2e} relative (tolerance 1e-9)")


def test_criterion_07_five_point_recovery():
    worst = 0.0
    nnz = set()
    for h in (1.0, 0.1, 1e-3):
        grid = h * np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
        p = build_problem([0, 0], grid, 4, laplacian(2))
        w = weights_l1(p)
        nnz.add(len(w))
        expect = np.zeros(9)
        for k, y in enumerate(grid / h):
            expect[k] = -4 if np.all(y == 0) else (1 if np.sum(np.abs(y)) == 1 else 0)
        got = np.zeros(9)
        for i, wi in w.entries:
            got[i] = wi
        worst = max(worst, np.max(np.abs(got * h ** 2 - expect)) / 4)
    ok = worst <= 1e-10 and nnz == {5}
    record(7, ok, f"3x3 grid at h = 1, 0.1, 1e-3: nnz {sorted(nnz)}, "
                  f"max relative deviation from (-4,1,1,1,1)/h^2 {worst:.1e} (<= 1e-10)")


def test_criterion_08_monotonicity():
    rng = np.random.default_rng(SEED + 3)
    worst = -np.inf
    for _ in range(100):
        z, Y, q, D = random_stencil_setup(rng, d=int(rng.integers(1, 3)))
        nu = dim_poly(len(z), q)
        keep = np.sort(rng.choice(len(Y), size=max(nu, len(Y) // 2), replace=False))
        extra = z + random_ball(rng, int(rng.integers(1, 2 * nu)), len(z))
        small = growth_function(build_problem(z, Y[keep], q, D))
        big = growth_function(build_problem(z, np.vstack([Y, extra]), q, D))
        worst = max(worst, (big - small) / max(1.0, small) - 1e-9)
    record(8, worst <= 0, f"100 nested pairs, max increase {worst + 1e-9:.2e} "
                          f"relative (tolerance 1e-9)")


def test_criterion_09_scaling_law():
    rng = np.random.default_rng(SEED + 4)
    lam = 2.0
    worst = 0.0
    same = 0
    total = 0
    for q in (3, 4):
        for d in (2, 3):
            for _ in range(10):
                z, Y, _, _ = random_stencil_setup(rng, d=d, q=q)
                p = build_problem(z, Y, q, laplacian(d))
                ps = build_problem(lam * z, lam * Y, q, laplacian(d))
                rho, rho_s = growth_function(p), growth_function(ps)
                worst = max(worst, abs(rho_s - lam ** (q - 2) * rho) / (lam ** (q - 2) * rho))
                a = set(weights_sparse_qr(p)[0].indices.tolist())
                b = set(weights_sparse_qr(ps)[0].indices.tolist())
                same += a == b
                total += 1
    ok = worst <= 1e-8 and same == total
    record(9, ok, f"{total} problems, max relative deviation {worst:.1e} (<= 1e-8), "
                  f"identical selections {same}/{total}")


def test_criterion_10_error_bound():
    rng = np.random.default_rng(SEED + 5)
    worst = -np.inf
    for _ in range(100):
        d = int(rng.integers(1, 4))
        q = int(rng.integers(3, 6))
        z, Y, _, _ = random_stencil_setup(rng, d=d, q=q)
        p = build_problem(z, Y, q, laplacian(d))
        exact = q * (q - 1) * z[0] ** (q - 2)
        for method in METHODS:
            w = compute_weights(p, method)
            err = abs(exact - apply_weights(w, p, lambda x: x[0] ** q))
            worst = max(worst, err - w.norm1 * (1 + 1e-8))
    record(10, worst <= 0, f"100 stencils x 3 methods with f = x1^q, "
                           f"max(error - bound) {worst:.2e} (<= 0)")


def _classical_matrix(n):
    h = 1.0 / (n - 1)
    A = sp.lil_matrix((n * n, n * n))
    for j, i in itertools.product(range(n), range(n)):
        k = j * n + i
        if i in (0, n - 1) or j in (0, n - 1):
            A[k, k] = 1.0
            continue
        A[k, k] = -4 / h ** 2
        for kk in (k - 1, k + 1, k - n, k + n):
            A[k, kk] = 1 / h ** 2
    return A.tocsr()


def test_criterion_11_poisson_convergence():
    t0 = time.perf_counter()
    table = convergence_study([11, 21, 41], 0.2, "sparse_qr", 4, 20, seed=0)
    order = table[-1]["order"]
    row_dev = 0.0
    sol_dev = 0.0
    for n in (11, 21, 41):
        X = gen_unit_square(n)
        S = assemble_poisson(X, "l1min", 4, 9, f=sinsin_rhs, g=sinsin)
        A = S.to_csr()
        C = _classical_matrix(n)
        scale = np.asarray(abs(C).max(axis=1).todense()).ravel()
        row_dev = max(row_dev, float(np.max(abs(A - C).max(axis=1).toarray().ravel() / scale)))
        u = solve_system(S)
        u_ref = sp.linalg.spsolve(C.tocsc(), S.rhs)
        sol_dev = max(sol_dev, float(np.max(np.abs(u - u_ref))))
    elapsed = time.perf_counter() - t0
    # the criterion is row-wise; the solution gap is reported for information
    ok = order >= 1.5 and row_dev <= 1e-12 and elapsed < 60
    record(11, ok, f"perturbed sparse_qr errors "
                   + ", ".join(f"{r['max_err']:.2e}" for r in table)
                   + f", final order {order:.2f} (>= 1.5); exact-grid l1 row deviation {row_dev:.1e} "
                     f"(<= 1e-12), solution gap {sol_dev:.1e}; {elapsed:.1f}s (< 60s)")


def _collinear_sets(rng):
    sets = []
    for _ in range(10):
        direction = rng.normal(size=2)
        direction /= np.linalg.norm(direction)
        t = rng.uniform(-1, 1, size=int(rng.integers(4, 12)))
        z = rng.normal(size=2)
        Y = z + np.outer(t, direction)
        if rng.random() < 0.5:
            Y = np.vstack([z, Y])
        # z off the line is also degenerate
        sets.append((z if rng.random() < 0.7 else z + 0.3 * np.array([-direction[1], direction[0]]), Y))
    return sets


def test_criterion_12_degenerate_geometry():
    rng = np.random.default_rng(SEED + 6)
    outcomes = []
    for z, Y in _collinear_sets(rng):
        for q in (3, 4):
            p = build_problem(z, Y, q, laplacian(2))
            sys = collocation_system(p)
            fac = qr_col_pivot(sys.A * sys.theta, rank=collocation_rank(sys))
            trailing = np.linalg.norm(apply_qt(fac, sys.b)[fac.rank:])
            with pytest.raises(GrowthInfinite) as qr_err:
                weights_sparse_qr(p)
            with pytest.raises(GrowthInfinite) as lp_err:
                weights_l1(p)
            outcomes.append(trailing > 1e-12 * np.linalg.norm(sys.b)
                            and "beyond the rank" in str(qr_err.value)
                            and isinstance(lp_err.value.__cause__, Infeasible))
    ok = all(outcomes)
    record(12, ok, f"{len(outcomes)} collinear configurations: QR path via trailing Q^T b and "
                   f"LP path via infeasibility agree in {sum(outcomes)}/{len(outcomes)}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
