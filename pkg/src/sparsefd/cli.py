"""Command-line front end.

Exit codes: 0 success, 1 usage/I/O/parse error, 2 GROWTH_INFINITE.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import linalg
from .basis import dim_poly, identity, laplacian, partial
from .errors import GrowthInfinite, StencilError
from .nodes import GridIndex, gen_unit_square, knn, read_nodes
from .pde import (assemble_poisson, convergence_study, error_norms, sinsin,
                  sinsin_rhs, solve_system, write_rhs, write_triplets)
from .stencil import (DEFAULT_S_TOL, build_problem, collocation_rank,
                      collocation_system, growth_bounds, growth_function,
                      weights_l1, weights_l2, weights_sparse_qr)

METHOD_NAMES = {"l2": "l2min", "l1": "l1min", "qr": "sparse_qr"}
OPERATORS = ("laplace", "dx", "dy", "identity", "laplace+dx")

# named manufactured problems for `solve`: (exact u, f = Laplace u)
PROBLEMS = {
    "sinsin": (sinsin, sinsin_rhs),
    "quadratic": (lambda x: float(np.sum(np.asarray(x) ** 2)), lambda x: 2.0 * len(x)),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def make_operator(name: str, d: int):
    if name == "laplace":
        return laplacian(d)
    if name == "dx":
        return partial(d, 0)
    if name == "dy":
        if d < 2:
            raise UsageError("operator dy needs d >= 2")
        return partial(d, 1)
    if name == "identity":
        return identity(d)
    if name == "laplace+dx":
        return laplacian(d) + partial(d, 0)
    raise UsageError(f"unknown operator {name!r}")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _unit_interval(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def build_parser():
    p = _Parser(prog="sparsefd", description="Sparse numerical differentiation stencils on scattered nodes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, nodes_required=True):
        sp.add_argument("--nodes", required=nodes_required, help="node file ('d N' header, rows 'x.. flag')")
        sp.add_argument("--q", type=int, default=4,
                        help="consistency order, exact for degree < q (default: %(default)s)")
        sp.add_argument("--method", choices=sorted(METHOD_NAMES), default="qr",
                        help="l1 = weighted l1-minimal, l2 = weighted l2-minimal, "
                             "qr = sparse pivoted QR (default: %(default)s)")
        sp.add_argument("--op", choices=OPERATORS, default="laplace",
                        help="differential operator (default: %(default)s)")
        sp.add_argument("--m", type=int, default=None,
                        help="nearest neighbors per stencil (default: all nodes for stencil/rho, "
                             "2*dim for sparsify/solve)")
        sp.add_argument("--rank-tol", type=_unit_interval, default=linalg.DEFAULT_RANK_TOL,
                        help="relative rank threshold (default: %(default)s)")
        sp.add_argument("--s-tol", type=_unit_interval, default=DEFAULT_S_TOL,
                        help="relative threshold on Q^T b for the selection (default: %(default)s)")
        sp.add_argument("--solve-tol", type=_unit_interval, default=1e-10,
                        help="relative residual of the global solve (default: %(default)s)")
        sp.add_argument("--perturb", type=float, default=0.0,
                        help="grid jitter as a fraction of spacing (default: %(default)s)")
        sp.add_argument("--seed", type=int, default=0, help="jitter seed (default: %(default)s)")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    for name, hlp in (("stencil", "weights of one formula at --z"),
                      ("rho", "growth function and its l2 bounds at --z")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--z", type=_floats, required=True, help="center, comma separated")
    sp = sub.add_parser("sparsify", help="per-node sparse-QR selection report (CSV)")
    common(sp)
    sp = sub.add_parser("solve", help="Poisson-Dirichlet solve on a node file or a generated grid")
    common(sp, nodes_required=False)
    sp.add_argument("--n", type=int, default=None, help="generate an n x n unit-square grid (with --perturb, --seed)")
    sp.add_argument("--problem", choices=sorted(PROBLEMS), default="sinsin",
                    help="manufactured solution (default: %(default)s)")
    sp = sub.add_parser("converge", help="convergence table for the sin*sin problem (CSV)")
    common(sp, nodes_required=False)
    sp.add_argument("--levels", type=_ints, default=[11, 21, 41], help="grid sizes, comma separated (default: 11,21,41)")
    return p


def _weight_kw(args):
    if args.method == "l1":
        return {}
    kw = {"rank_tol_rel": args.rank_tol}
    if args.method == "qr":
        kw["s_tol_rel"] = args.s_tol
    return kw


def _problem(args):
    X = read_nodes(args.nodes)
    z = np.array(args.z)
    if len(z) != X.d:
        raise UsageError(f"--z has {len(z)} coordinates, nodes are {X.d}-dimensional")
    ids = np.arange(len(X)) if args.m is None else knn(X, z, min(args.m, len(X)))
    return build_problem(z, X.points[ids], args.q, make_operator(args.op, X.d)), ids


def _fmt(v):
    return repr(float(v))


def cmd_stencil(args, out):
    p, ids = _problem(args)
    r = s = bf = "na"
    if args.method == "qr":
        w, diag = weights_sparse_qr(p, args.rank_tol, args.s_tol)
        r, s, bf = diag.rank, diag.s, _fmt(diag.bound_factor)
    else:
        w = weights_l2(p, args.rank_tol) if args.method == "l2" else weights_l1(p)
        r = collocation_rank(collocation_system(p), args.rank_tol) + int(p.has_center)
    out.write(f"method={METHOD_NAMES[args.method]}\n")
    out.write("selected=" + " ".join(str(int(ids[j])) for j in w.indices) + "\n")
    out.write("weights=" + " ".join(_fmt(v) for v in w.weights) + "\n")
    out.write(f"nnz={len(w)}\nr={r}\ns={s}\nbound_factor={bf}\n")
    out.write(f"norm1={_fmt(w.norm1)}\nnorm2={_fmt(w.norm2)}\n")


def cmd_rho(args, out):
    p, _ = _problem(args)
    rho = growth_function(p)
    lo, hi = growth_bounds(p)
    out.write(f"rho={_fmt(rho)}\nlower={_fmt(lo)}\nupper={_fmt(hi)}\nm={p.m}\n")


SPARSIFY_FIELDS = ("node", "m_used", "nnz_selected", "bound_factor", "ratio")


def sparsify_summary(rows):
    """Summary statistics of a sparsify report (list of row dicts with float fields)."""
    if not rows:
        return {"count": 0}
    nnz = [float(r["nnz_selected"]) for r in rows]
    bf = [float(r["bound_factor"]) for r in rows]
    ratio = [float(r["ratio"]) for r in rows]
    return {"count": len(rows), "mean_nnz": sum(nnz) / len(nnz), "max_nnz": max(nnz),
            "mean_bound_factor": sum(bf) / len(bf), "max_bound_factor": max(bf),
            "mean_ratio": sum(ratio) / len(ratio), "max_ratio": max(ratio)}


def format_summary(summary):
    return "# summary " + " ".join(f"{k}={v!r}" for k, v in summary.items()) + "\n"


def cmd_sparsify(args, out):
    X = read_nodes(args.nodes)
    D = make_operator(args.op, X.d)
    m = min(args.m or 2 * dim_poly(X.d, args.q), len(X))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SPARSIFY_FIELDS)
    rows = []
    index = GridIndex(X.points)
    for i in X.interior:
        nbr = knn(X, X.points[i], m, index)
        try:
            p = build_problem(X.points[i], X.points[nbr], args.q, D)
            w, diag = weights_sparse_qr(p, args.rank_tol, args.s_tol)
            w2 = weights_l2(p, args.rank_tol)
        except GrowthInfinite as exc:
            raise GrowthInfinite(f"GROWTH_INFINITE at node {i}", node=int(i)) from exc
        ratio = w.norm2 / w2.norm2 if w2.norm2 > 0 else 1.0
        row = {"node": int(i), "m_used": p.m, "nnz_selected": len(w),
               "bound_factor": float(diag.bound_factor), "ratio": float(ratio)}
        writer.writerow([row["node"], row["m_used"], row["nnz_selected"],
                         _fmt(row["bound_factor"]), _fmt(row["ratio"])])
        rows.append(row)
    out.write(format_summary(sparsify_summary(rows)))


def _nodes_for_solve(args):
    if args.nodes:
        return read_nodes(args.nodes)
    if args.n is None:
        raise UsageError("solve needs --nodes or --n")
    return gen_unit_square(args.n, args.perturb, args.seed)


def cmd_solve(args, out):
    if args.op != "laplace":
        raise UsageError("solve supports only --op laplace")
    X = _nodes_for_solve(args)
    u_exact, f = PROBLEMS[args.problem]
    S = assemble_poisson(X, METHOD_NAMES[args.method], args.q, args.m, f=f, g=u_exact,
                         **_weight_kw(args))
    u = solve_system(S, args.solve_tol)
    emax, erms = error_norms(u, u_exact, X)
    if args.out:
        write_triplets(args.out, S)
        write_rhs(args.out + ".rhs", S)
    interior = ~X.boundary
    nnz = S.row_nnz()[interior]
    sys.stdout.write(f"N={S.N}\nnnz={len(S.vals)}\n"
                     f"mean_row_nnz={_fmt(nnz.mean() if nnz.size else 0.0)}\n"
                     f"max_err={_fmt(emax)}\nrms_err={_fmt(erms)}\n")


def cmd_converge(args, out):
    if len(args.levels) < 2:
        raise UsageError("--levels needs at least two grid sizes")
    table = convergence_study(args.levels, args.perturb, METHOD_NAMES[args.method], args.q,
                              args.m, args.seed, **_weight_kw(args))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "h", "max_err", "rms_err", "order"])
    for row in table:
        writer.writerow([row["n"], _fmt(row["h"]), _fmt(row["max_err"]),
                         _fmt(row["rms_err"]), _fmt(row["order"])])


COMMANDS = {"stencil": cmd_stencil, "rho": cmd_rho, "sparsify": cmd_sparsify,
            "solve": cmd_solve, "converge": cmd_converge}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.out and args.command != "solve":
            with open(args.out, "w") as out:
                COMMANDS[args.command](args, out)
        else:
            COMMANDS[args.command](args, sys.stdout)
    except GrowthInfinite as exc:
        msg = str(exc)
        sys.stderr.write((msg if msg.startswith("GROWTH_INFINITE") else f"GROWTH_INFINITE: {msg}") + "\n")
        return 2
    except (UsageError, OSError, ValueError, StencilError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
