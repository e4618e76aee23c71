"""Greedy coordinate-descent solvers for dense linear least squares.

GCD (Gauss-Southwell), two-step Gauss-Seidel and the greedy double
subspaces method (GDSCD), plus a coherent-matrix problem generator,
convergence audits and a benchmark harness.
"""

from .dense import (DenseMatrix, column, column_norms, gram_column, inner,
                    normalize_columns, sigma_min)
from .errors import (ConfigError, DegenerateInputError, GenerationError, GreedyCDError,
                     NumericalError, ParseError, UsageError)
from .problems import (CoherenceStats, GenSpec, Problem, coherence, generate_matrix,
                       generate_problem, make_rhs, make_solution)
from .solvers import (Method, SolveReport, SolverConfig, SolverState, Stopping, Termination,
                      TraceRow, residual_init, run, select_greedy, solve, step_2sgs,
                      step_cyclic, step_gcd, step_gdscd, step_gdscd_init)
from .theory import ContractionRecord, HoffmanBound, contraction_audit, hoffman_lower_bound

__version__ = "0.1.0"
