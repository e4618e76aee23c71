"""Repeated seeded benchmark runs averaged into IT/CPU tables.

Each cell of the grid is a (shape, c, method) triple. For every (shape, c)
we draw ``repeats`` problems with seeds ``base_seed .. base_seed+repeats-1``
and run every method on the same instances. Capped runs count as
``max_iters`` in the mean. The first repeat of every cell also writes a
per-iteration RSE trace for plotting.

Work is spread over ``jobs`` worker processes, one (shape, c, seed) unit per
task; every solver run stays single-threaded and results are merged in seed
order, so everything except the timing columns is independent of ``jobs``.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .io import fmt, write_csv, write_trace_csv
from .problems import GenSpec, generate_problem
from .solvers import Method, SolverConfig, Termination, run

log = logging.getLogger(__name__)

DEFAULT_C_VALUES = (-0.8, -0.1, 0.8, 0.85, 0.9, 0.95)
GRIDS = {
    "desk": [(200, 50)],
    "medium": [(500, 100)],
    "large": [(5000, 500)],
}
ALL_METHODS = (Method.GCD, Method.TWOSTEP_GS, Method.GDSCD)

RESULTS_HEADER = ["m", "n", "c", "method", "repeats", "mean_it", "mean_cpu_seconds",
                  "capped_fraction", "mean_delta", "mean_Delta", "error"]
RUNS_HEADER = ["m", "n", "c", "method", "seed", "iterations", "terminated",
               "cpu_seconds", "final_rse", "delta", "Delta", "error"]
TIMING_COLUMNS = ("mean_cpu_seconds", "cpu_seconds")


@dataclass
class BenchSpec:
    shapes: Sequence[Tuple[int, int]] = field(default_factory=lambda: list(GRIDS["desk"]))
    c_values: Sequence[float] = DEFAULT_C_VALUES
    methods: Sequence[Method] = ALL_METHODS
    repeats: int = 30
    consistent: bool = True
    tol: float = 1e-6
    max_iters: int = 200_000
    base_seed: int = 0
    output_dir: Optional[Path] = None
    jobs: int = 1
    trace_every: int = 1
    inconsistency_magnitude: float = 0.1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        for m, n in self.shapes:
            if not m > n:
                raise ValueError(f"every shape needs m > n, got {m}x{n}")
        self.methods = [Method.parse(mt) for mt in self.methods]
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class RunRecord:
    m: int
    n: int
    c: float
    method: Method
    seed: int
    iterations: Optional[int] = None
    terminated: Optional[str] = None
    cpu_seconds: Optional[float] = None
    final_rse: Optional[float] = None
    delta: Optional[float] = None
    Delta: Optional[float] = None
    error: Optional[str] = None


@dataclass
class BenchRow:
    m: int
    n: int
    c: float
    method: Method
    repeats: int
    mean_it: Optional[float]
    mean_cpu_seconds: Optional[float]
    capped_fraction: Optional[float]
    mean_delta: Optional[float]
    mean_Delta: Optional[float]
    error: Optional[str] = None

    @property
    def table_marker(self):
        """``'--'`` when most repeats hit the iteration cap."""
        return "--" if self.capped_fraction is not None and self.capped_fraction > 0.5 else None


def trace_name(m, n, c, method):
    return f"trace_{m}x{n}_c{fmt(c)}_{Method.parse(method).value}.csv"


def _run_unit(args):
    spec, m, n, c, seed = args
    out = []
    try:
        problem, stats = generate_problem(GenSpec(
            m, n, c, consistent=spec.consistent, seed=seed,
            inconsistency_magnitude=spec.inconsistency_magnitude))
    except Exception as exc:  # recorded per cell, the grid keeps going
        return [RunRecord(m, n, c, mt, seed, error=f"{type(exc).__name__}: {exc}")
                for mt in spec.methods]
    first = seed == spec.base_seed and spec.output_dir is not None and spec.trace_every > 0
    for method in spec.methods:
        rec = RunRecord(m, n, c, method, seed, delta=stats.delta, Delta=stats.Delta)
        try:
            cfg = SolverConfig(method=method, tol=spec.tol, max_iters=spec.max_iters,
                               trace_every=spec.trace_every if first else 0)
            rep = run(problem, cfg)
        except Exception as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        else:
            rec.iterations = rep.iterations
            rec.terminated = rep.terminated.value
            rec.cpu_seconds = rep.wall_seconds
            rec.final_rse = rep.final_rse
            if first:
                write_trace_csv(rep.trace,
                                Path(spec.output_dir) / "traces" / trace_name(m, n, c, method))
        out.append(rec)
    return out


def _mean(values):
    return math.fsum(values) / len(values)


def aggregate(records, spec):
    """Average per-run records into one BenchRow per (shape, c, method)."""
    rows = []
    for m, n in spec.shapes:
        for c in spec.c_values:
            for method in spec.methods:
                cell = [r for r in records
                        if (r.m, r.n, r.c, r.method) == (m, n, c, method)]
                failed = [r for r in cell if r.error is not None]
                if failed:
                    rows.append(BenchRow(m, n, c, method, len(cell), None, None, None,
                                         None, None, error=failed[0].error))
                    continue
                rows.append(BenchRow(
                    m, n, c, method, len(cell),
                    mean_it=_mean([r.iterations for r in cell]),
                    mean_cpu_seconds=_mean([r.cpu_seconds for r in cell]),
                    capped_fraction=sum(r.terminated == Termination.ITER_CAP.value
                                        for r in cell) / len(cell),
                    mean_delta=_mean([r.delta for r in cell]),
                    mean_Delta=_mean([r.Delta for r in cell])))
    return rows


def run_benchmark(spec):
    """Run the grid; returns ``(rows, records)`` and writes CSVs when ``output_dir`` is set."""
    if spec.output_dir is not None:
        (Path(spec.output_dir) / "traces").mkdir(parents=True, exist_ok=True)
    units = [(spec, m, n, c, spec.base_seed + r)
             for m, n in spec.shapes for c in spec.c_values for r in range(spec.repeats)]
    if spec.jobs == 1:
        chunks = [_run_unit(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            chunks = list(pool.map(_run_unit, units))
    records = [rec for chunk in chunks for rec in chunk]
    for rec in records:
        if rec.error:
            log.warning("run %sx%s c=%s %s seed=%s failed: %s",
                        rec.m, rec.n, rec.c, rec.method.value, rec.seed, rec.error)
    rows = aggregate(records, spec)
    if spec.output_dir is not None:
        out = Path(spec.output_dir)
        write_results_csv(rows, out / "results.csv")
        write_runs_csv(records, out / "runs.csv")
        (out / "table.txt").write_text(render_table(rows, spec))
    return rows, records


def write_results_csv(rows, path):
    write_csv(path, RESULTS_HEADER,
              ([r.m, r.n, r.c, r.method.value, r.repeats, r.mean_it, r.mean_cpu_seconds,
                r.capped_fraction, r.mean_delta, r.mean_Delta, r.error] for r in rows))


def write_runs_csv(records, path):
    write_csv(path, RUNS_HEADER,
              ([r.m, r.n, r.c, r.method.value, r.seed, r.iterations, r.terminated,
                r.cpu_seconds, r.final_rse, r.delta, r.Delta, r.error] for r in records))


def render_table(rows, spec):
    """Plain-text IT/CPU table, one block per shape with methods as row pairs."""
    lines = []
    for m, n in spec.shapes:
        cells = {(r.c, r.method): r for r in rows if (r.m, r.n) == (m, n)}
        cs = list(spec.c_values)
        w = 12
        lines.append(f"{m} x {n}  ({'consistent' if spec.consistent else 'inconsistent'}, "
                     f"{spec.repeats} repeats)")
        lines.append(f"{'c':<14}" + "".join(f"{c:>{w}g}" for c in cs))
        first = spec.methods[0]
        for label, attr in (("delta", "mean_delta"), ("Delta", "mean_Delta")):
            vals = [getattr(cells[(c, first)], attr) for c in cs]
            lines.append(f"{label:<14}" + "".join(
                f"{v:>{w}.4g}" if v is not None else f"{'err':>{w}}" for v in vals))
        for method in spec.methods:
            it_line, cpu_line = f"{method.value:<10}IT  ", f"{'':<10}CPU "
            for c in cs:
                r = cells[(c, method)]
                if r.error is not None:
                    it_txt = cpu_txt = "err"
                elif r.table_marker:
                    it_txt = cpu_txt = r.table_marker
                else:
                    it_txt, cpu_txt = f"{r.mean_it:.0f}", f"{r.mean_cpu_seconds:.4f}"
                it_line += f"{it_txt:>{w}}"
                cpu_line += f"{cpu_txt:>{w}}"
            lines += [it_line, cpu_line]
        lines.append("")
    return "\n".join(lines)
