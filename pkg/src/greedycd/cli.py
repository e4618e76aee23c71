"""Command-line front end: ``greedycd {gen,solve,bench,audit}``.

Exit codes: 0 converged / success, 1 error, 2 run ended without reaching the
tolerance (iteration cap or stagnation).
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .bench import GRIDS, DEFAULT_C_VALUES, BenchSpec, run_benchmark
from .dense import normalize_columns
from .errors import GreedyCDError
from .problems import GenSpec, Problem, generate_problem
from .solvers import Method, SolverConfig, Stopping, Termination, run
from .theory import contraction_audit, hoffman_lower_bound

EXIT_OK, EXIT_ERROR, EXIT_CAP = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _shape(text):
    try:
        m, n = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like 200x50, got {text!r}") from None
    return m, n


def build_parser():
    p = _Parser(prog="greedycd", description="Greedy coordinate descent for dense least squares.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random coherent test problem")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--c", type=float, required=True, help="entries are uniform on [c, 1]")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--inconsistent", action="store_true")
    g.add_argument("--b0-scale", type=float, default=0.1,
                   help="||b0|| relative to ||A x*|| for inconsistent systems")
    g.add_argument("--out", type=Path, required=True)

    methods = ["cyclic", "gcd", "2sgs", "gdscd"]
    s = sub.add_parser("solve", help="solve a least-squares problem from files")
    _problem_args(s)
    s.add_argument("--method", choices=methods, default="gdscd")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--max-iters", type=int, default=200_000)
    s.add_argument("--stopping", choices=[e.value for e in Stopping],
                   help="default: rse when --xstar is given, else grad_inf")
    s.add_argument("--trace", type=Path, help="write the per-iteration trace CSV here")
    s.add_argument("--audit", type=Path, help="write the contraction audit CSV here")
    s.add_argument("--normalize", action="store_true", help="scale columns to unit norm first")

    a = sub.add_parser("audit", help="run GDSCD (or GCD) and audit the convergence identities")
    _problem_args(a)
    a.add_argument("--method", choices=["gcd", "gdscd"], default="gdscd")
    a.add_argument("--tol", type=float, default=1e-6)
    a.add_argument("--max-iters", type=int, default=200_000)
    a.add_argument("--samples", type=int, default=0,
                   help="random samples for an upper bracket on the Hoffman constant")
    a.add_argument("--normalize", action="store_true")
    a.add_argument("--out", type=Path, required=True, help="audit CSV path")

    b = sub.add_parser("bench", help="averaged IT/CPU tables over repeated seeded runs")
    b.add_argument("--grid", choices=sorted(GRIDS), default="desk")
    b.add_argument("--shape", type=_shape, action="append",
                   help="override the grid, e.g. --shape 200x50 (repeatable)")
    b.add_argument("--c", type=float, nargs="+", default=list(DEFAULT_C_VALUES))
    b.add_argument("--methods", nargs="+", choices=methods, default=["gcd", "2sgs", "gdscd"])
    b.add_argument("--repeats", type=int, default=30)
    b.add_argument("--inconsistent", action="store_true")
    b.add_argument("--b0-scale", type=float, default=0.1)
    b.add_argument("--tol", type=float, default=1e-6)
    b.add_argument("--max-iters", type=int, default=200_000)
    b.add_argument("--seed", type=int, default=0, help="base seed")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--trace-every", type=int, default=1)
    b.add_argument("--out", type=Path, required=True)
    return p


def _problem_args(p):
    p.add_argument("--problem", type=Path,
                   help="directory written by 'gen' (A.mtx, b.txt, xstar.txt, meta.json)")
    p.add_argument("--matrix", type=Path)
    p.add_argument("--rhs", type=Path)
    p.add_argument("--xstar", type=Path)


def _load_problem(args):
    consistent = True
    if args.problem is not None:
        d = args.problem
        matrix, rhs = d / "A.mtx", d / "b.txt"
        xstar = args.xstar or (d / "xstar.txt" if (d / "xstar.txt").exists() else None)
        if (d / "meta.json").exists():
            consistent = json.loads((d / "meta.json").read_text()).get("consistent", True)
    else:
        if args.matrix is None or args.rhs is None:
            raise GreedyCDError("give --problem DIR or both --matrix and --rhs")
        matrix, rhs, xstar = args.matrix, args.rhs, args.xstar
    A = io.read_matrix_market(matrix)
    b = io.read_vector(rhs)
    x_star = io.read_vector(xstar) if xstar is not None else None
    scale = None
    if args.normalize:
        A, scale = normalize_columns(A)
        if x_star is not None:
            x_star = x_star * scale
    return Problem(A, b, x_star, consistent), scale


def cmd_gen(args):
    spec = GenSpec(args.m, args.n, args.c, consistent=not args.inconsistent,
                   seed=args.seed, inconsistency_magnitude=args.b0_scale)
    problem, stats = generate_problem(spec)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix_market(problem.A, out / "A.mtx")
    io.write_vector(problem.b, out / "b.txt")
    io.write_vector(problem.x_star, out / "xstar.txt")
    r = problem.b - problem.A.matvec(problem.x_star)
    meta = {
        "m": spec.m, "n": spec.n, "c": spec.c, "seed": spec.seed,
        "consistent": spec.consistent,
        "inconsistency_magnitude": spec.inconsistency_magnitude,
        "generator": "numpy PCG64, SeedSequence([seed, stream])",
        "coherence": {"delta": stats.delta, "Delta": stats.Delta, "rank": stats.rank,
                      "sigma_min": stats.sigma_min},
        "residual_norm": float(np.linalg.norm(r)),
        "null_leak_inf": float(np.max(np.abs(problem.A.rmatvec(r)))),
    }
    io.write_json(meta, out / "meta.json")
    print(f"wrote {out}/A.mtx b.txt xstar.txt meta.json  delta={stats.delta:.6g} "
          f"Delta={stats.Delta:.6g}")
    return EXIT_OK


def _summary(report):
    tail = (f"rse={report.final_rse:.3e}" if report.final_rse is not None
            else f"s_inf={report.final_s_inf:.3e}")
    return (f"method={report.method.value} iterations={report.iterations} "
            f"terminated={report.terminated.value} wall_seconds={report.wall_seconds:.4f} {tail}")


def _exit_for(report):
    return EXIT_OK if report.terminated is Termination.CONVERGED else EXIT_CAP


def _audit(problem, report, path, samples=0):
    bound = hoffman_lower_bound(problem.A, samples=samples)
    records = contraction_audit(report, problem, bound)
    io.write_audit_csv(records, path)
    bad = sum(r.violation for r in records)
    worst = max((abs(r.decrement_gap) / r.energy_before for r in records), default=0.0)
    line = (f"audit: records={len(records)} violations={bad} sigma_lb={bound.sigma_lb:.6g} "
            f"max_rel_identity_gap={worst:.3e}")
    if bound.sampled_upper is not None:
        line += f" sampled_upper={bound.sampled_upper:.6g}"
    print(line)
    return bad


def cmd_solve(args):
    problem, scale = _load_problem(args)
    stopping = args.stopping or ("rse" if problem.x_star is not None else "grad_inf")
    audit = args.audit is not None
    if audit and args.method not in ("gcd", "gdscd"):
        raise GreedyCDError("--audit supports --method gcd or gdscd")
    if audit and problem.x_star is None:
        raise GreedyCDError("--audit needs --xstar")
    traced = args.trace is not None or audit
    cfg = SolverConfig(method=args.method, tol=args.tol, max_iters=args.max_iters,
                       stopping=stopping, trace_every=1 if traced else 0,
                       trace_energy=audit)
    report = run(problem, cfg)
    print(_summary(report))
    if args.trace is not None:
        io.write_trace_csv(report.trace, args.trace)
    if audit:
        _audit(problem, report, args.audit)
    return _exit_for(report)


def cmd_audit(args):
    problem, _ = _load_problem(args)
    if problem.x_star is None:
        raise GreedyCDError("audit needs the known solution (--xstar or xstar.txt)")
    cfg = SolverConfig(method=args.method, tol=args.tol, max_iters=args.max_iters,
                       trace_every=1, trace_energy=True)
    report = run(problem, cfg)
    print(_summary(report))
    bad = _audit(problem, report, args.out, samples=args.samples)
    return EXIT_ERROR if bad else _exit_for(report)


def cmd_bench(args):
    spec = BenchSpec(shapes=args.shape or GRIDS[args.grid], c_values=args.c,
                     methods=[Method.parse(m) for m in args.methods], repeats=args.repeats,
                     consistent=not args.inconsistent, tol=args.tol,
                     max_iters=args.max_iters, base_seed=args.seed, output_dir=args.out,
                     jobs=args.jobs, trace_every=args.trace_every,
                     inconsistency_magnitude=args.b0_scale)
    rows, _ = run_benchmark(spec)
    print((args.out / "table.txt").read_text(), end="")
    return EXIT_ERROR if any(r.error for r in rows) else EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "audit": cmd_audit, "bench": cmd_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GreedyCDError, ValueError, OSError) as exc:
        print(f"greedycd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
