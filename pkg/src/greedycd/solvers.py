"""Coordinate-descent solvers for dense least-squares problems.

All methods work on the normal-equation residual ``s = A^T (b - A x)``,
kept up to date with rank-one Gram-column updates (O(n) per step) and
recomputed from scratch every ``refresh_every`` steps to bound drift.
Columns of ``A`` must have unit norm; :func:`solve` normalizes for you.

Indices are 0-based. Greedy selection breaks ties toward the smallest index.
"""

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .dense import _dot, column_norms, gram_column, normalize_columns
from .errors import ConfigError, NumericalError, UsageError
from .problems import Problem


class Method(str, enum.Enum):
    CYCLIC = "cyclic"
    GCD = "gcd"
    TWOSTEP_GS = "twostep_gs"
    GDSCD = "gdscd"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("2sgs", "two_step_gs", "twostep-gs"):
            key = "twostep_gs"
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown method {value!r}") from None


class Stopping(str, enum.Enum):
    RSE = "rse"
    GRAD_INF = "grad_inf"


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    ITER_CAP = "iter_cap"
    STAGNATION = "stagnation"


@dataclass
class SolverConfig:
    method: Method = Method.GDSCD
    tol: float = 1e-6
    max_iters: int = 200_000
    stopping: Stopping = Stopping.RSE
    mu_guard: float = 1e-12
    checks_enabled: bool = False
    trace_every: int = 1
    trace_energy: bool = False
    refresh_every: int = 10_000
    stagnation_window: int = 1_000
    stagnation_rtol: float = 1e-16

    def __post_init__(self):
        self.method = Method.parse(self.method)
        try:
            self.stopping = Stopping(self.stopping)
        except ValueError:
            raise ConfigError(f"unknown stopping rule {self.stopping!r}") from None
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not 0 < self.mu_guard < 1:
            raise ConfigError("mu_guard must lie in (0, 1)")
        if self.trace_every < 0:
            raise ConfigError("trace_every must be >= 0 (0 disables tracing)")
        if self.refresh_every < 1:
            raise ConfigError("refresh_every must be >= 1")


@dataclass
class StepInfo:
    """What the last step did: pivots, pivot residual and energy decrement."""

    j1: int
    j2: Optional[int] = None
    mu_tilde: Optional[float] = None
    s_j1: float = 0.0
    decrement: float = 0.0
    fallback: bool = False


@dataclass
class SolverState:
    x: np.ndarray
    s: np.ndarray
    prev_index: Optional[int] = None
    k: int = 0
    fallback_count: int = 0
    last: Optional[StepInfo] = None


@dataclass
class TraceRow:
    k: int
    j1: Optional[int]
    j2: Optional[int]
    mu_tilde: Optional[float]
    rse: Optional[float]
    energy_sq: Optional[float]
    s_inf: float


@dataclass
class SolveReport:
    method: Method
    iterations: int
    terminated: Termination
    wall_seconds: float
    final_rse: Optional[float]
    final_s_inf: float
    x: np.ndarray
    fallback_count: int = 0
    trace: List[TraceRow] = field(default_factory=list)

    @property
    def converged(self):
        return self.terminated is Termination.CONVERGED


def full_residual(problem, x):
    """``A^T (b - A x)`` computed directly in O(mn)."""
    A = problem.A
    return A.rmatvec(problem.b - A.matvec(x))


def residual_init(problem, x0=None):
    n = problem.A.n
    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != (n,):
            raise UsageError(f"x0 has shape {x.shape}, expected ({n},)")
    return SolverState(x=x, s=full_residual(problem, x))


def select_greedy(s, exclude=None):
    """Index of the largest ``|s[j]|``, skipping ``exclude``; ties go to the smallest index."""
    a = np.abs(s)
    if exclude is not None:
        if a.shape[0] < 2:
            raise UsageError("exclusion needs at least two entries")
        a[exclude] = -1.0
    return int(np.argmax(a))


def _coordinate_step(state, problem, j):
    sj = float(state.s[j])
    state.x[j] += sj
    state.s -= sj * gram_column(problem.A, j)
    state.last = StepInfo(j1=j, s_j1=sj, decrement=sj * sj)
    state.k += 1
    return state


def step_cyclic(state, problem):
    """Classical Gauss-Seidel on the normal equations: ``j = k mod n``."""
    return _coordinate_step(state, problem, state.k % problem.A.n)


def step_gcd(state, problem):
    """Gauss-Southwell step on the coordinate with the largest residual."""
    j = select_greedy(state.s)
    _coordinate_step(state, problem, j)
    state.prev_index = j
    return state


def step_2sgs(state, problem):
    """Two-step Gauss-Seidel: update the two largest residual coordinates at once."""
    if problem.A.n < 2:
        raise UsageError("two-step Gauss-Seidel needs n >= 2")
    s = state.s
    j1 = select_greedy(s)
    j2 = select_greedy(s, exclude=j1)
    a, b = float(s[j1]), float(s[j2])
    g1 = gram_column(problem.A, j1)
    g2 = gram_column(problem.A, j2)
    mu = float(g1[j2])
    state.x[j1] += a
    state.x[j2] += b
    state.s -= a * g1 + b * g2
    state.last = StepInfo(j1=j1, j2=j2, s_j1=a,
                          decrement=a * a + b * b - 2.0 * a * b * mu)
    state.k += 1
    return state


def step_gdscd_init(state, problem):
    if state.k != 0:
        raise UsageError(f"the initial GDSCD step must run at k=0, not k={state.k}")
    return step_gcd(state, problem)


def step_gdscd(state, problem, mu_guard=1e-12):
    """Project onto the intersection of the current and previous pivot hyperplanes.

    ``j1`` is the greedy pivot of the current residual and ``j2`` the pivot
    of the previous step, whose residual entry is already zero. When the two
    columns are numerically parallel (``1 - mu^2 < mu_guard``) a plain greedy
    step is taken instead and ``fallback_count`` is incremented.
    """
    if state.prev_index is None or state.k < 1:
        raise UsageError("step_gdscd needs a previous pivot; call step_gdscd_init first")
    A = problem.A
    s = state.s
    j1 = select_greedy(s)
    j2 = state.prev_index
    g1 = gram_column(A, j1)
    mu = float(g1[j2])
    gap = 1.0 - mu * mu
    if gap < mu_guard:
        step_gcd(state, problem)
        state.last.fallback = True
        state.fallback_count += 1
        return state

    s1 = float(s[j1])
    root = math.sqrt(gap)
    s_y = s - s1 * g1
    tau = (s_y[j2] - mu * s_y[j1]) / root
    coef = tau / root
    state.x[j1] += s1 - mu * coef
    state.x[j2] += coef
    state.s = s_y - coef * (gram_column(A, j2) - mu * g1)
    state.prev_index = j1
    state.last = StepInfo(j1=j1, j2=j2, mu_tilde=mu, s_j1=s1,
                          decrement=s1 * s1 + tau * tau)
    state.k += 1
    return state


def _stepper(config):
    method = config.method
    if method is Method.CYCLIC:
        return lambda st, pb: step_cyclic(st, pb)
    if method is Method.GCD:
        return lambda st, pb: step_gcd(st, pb)
    if method is Method.TWOSTEP_GS:
        return lambda st, pb: step_2sgs(st, pb)

    def gdscd(st, pb):
        if st.k == 0:
            return step_gdscd_init(st, pb)
        return step_gdscd(st, pb, config.mu_guard)
    return gdscd


def check_unit_columns(A, tol=1e-8):
    dev = float(np.max(np.abs(column_norms(A) - 1.0)))
    if dev > tol:
        raise UsageError(
            f"columns must have unit norm (max deviation {dev:.3g}); normalize first")


def energy_sq(problem, x):
    """``||A (x* - x)||^2``; requires the known solution."""
    r = problem.A.matvec(problem.x_star - x)
    return float(_dot(r, r))


def run(problem: Problem, config: SolverConfig, x0=None,
        callback: Optional[Callable[[SolverState], None]] = None) -> SolveReport:
    """Iterate ``config.method`` from ``x0`` (default zero) until a stopping rule fires.

    ``callback(state)`` is invoked after every step. ``wall_seconds`` times
    the stepping loop only.
    """
    xs = problem.x_star
    if config.stopping is Stopping.RSE and xs is None:
        raise ConfigError("the RSE stopping rule needs a known solution x_star")
    if config.trace_energy and xs is None:
        raise ConfigError("energy tracing needs a known solution x_star")
    check_unit_columns(problem.A)
    if config.method is Method.TWOSTEP_GS and problem.A.n < 2:
        raise ConfigError("two-step Gauss-Seidel needs n >= 2")

    state = residual_init(problem, x0)
    step = _stepper(config)
    pivot_checked = config.method in (Method.GCD, Method.GDSCD)
    scale = 1.0 + float(np.max(np.abs(problem.A.rmatvec(problem.b))))
    drift_tol = 1e-8 * scale
    r0 = problem.b - problem.A.matvec(state.x)
    stag_floor = config.stagnation_rtol * max(float(_dot(r0, r0)), np.finfo(float).tiny)
    xs_sq = float(_dot(xs, xs)) if xs is not None else None
    if xs_sq == 0.0:
        xs_sq = None
        if config.stopping is Stopping.RSE:
            raise ConfigError("RSE is undefined for x_star = 0")
    use_rse = config.stopping is Stopping.RSE
    every = config.trace_every
    trace = []
    stagnant = 0
    reason = None

    def rse_of(x):
        d = x - xs
        return float(_dot(d, d)) / xs_sq

    t0 = time.perf_counter()
    while True:
        k = state.k
        s_inf = float(np.max(np.abs(state.s)))
        due = every > 0 and k % every == 0
        rse = rse_of(state.x) if xs_sq is not None and (use_rse or due) else None
        done = rse <= config.tol if use_rse else s_inf <= config.tol
        if done or s_inf == 0.0:
            reason = Termination.CONVERGED
        elif k >= config.max_iters:
            reason = Termination.ITER_CAP
        elif stagnant >= config.stagnation_window:
            reason = Termination.STAGNATION
        if reason is not None:
            if every > 0:
                if rse is None and xs_sq is not None:
                    rse = rse_of(state.x)
                trace.append(TraceRow(k, None, None, None, rse,
                                      energy_sq(problem, state.x) if config.trace_energy else None,
                                      s_inf))
            break

        energy = energy_sq(problem, state.x) if due and config.trace_energy else None
        step(state, problem)
        info = state.last
        if due:
            trace.append(TraceRow(k, info.j1, info.j2, info.mu_tilde, rse, energy, s_inf))
        stagnant = stagnant + 1 if info.decrement < stag_floor else 0

        if config.checks_enabled and pivot_checked:
            pivots = [info.j1] if info.j2 is None else [info.j1, info.j2]
            worst = float(np.max(np.abs(state.s[pivots])))
            if worst > 1e-10 * scale:
                raise NumericalError("pivot residual not annihilated", k=state.k,
                                     pivots=pivots, value=worst)
        if state.k % config.refresh_every == 0 or (
                config.checks_enabled and state.k % 100 == 0):
            fresh = full_residual(problem, state.x)
            if config.checks_enabled:
                drift = float(np.max(np.abs(fresh - state.s)))
                if drift > drift_tol:
                    raise NumericalError("incremental residual drifted", k=state.k,
                                         drift=drift, tol=drift_tol)
            if state.k % config.refresh_every == 0:
                state.s = fresh
        if callback is not None:
            callback(state)
    wall = time.perf_counter() - t0

    final_rse = rse_of(state.x) if xs_sq is not None else None
    return SolveReport(method=config.method, iterations=state.k, terminated=reason,
                       wall_seconds=wall, final_rse=final_rse, final_s_inf=s_inf,
                       x=state.x, fallback_count=state.fallback_count, trace=trace)


def solve(A, b, config=None, x0=None, x_star=None, normalize=True):
    """Solve ``min ||b - A x||`` for a matrix with arbitrary column scaling.

    Columns are normalized, the scaled problem is solved, and the iterate is
    mapped back to the original variables. Returns ``(x, report)``.
    """
    config = config or SolverConfig(stopping=Stopping.GRAD_INF)
    if normalize:
        A_hat, norms = normalize_columns(A)
    else:
        A_hat, norms = A, np.ones(A.n)
    xs_hat = None if x_star is None else np.asarray(x_star, dtype=np.float64) * norms
    y0 = None if x0 is None else np.asarray(x0, dtype=np.float64) * norms
    report = run(Problem(A_hat, b, xs_hat), config, y0)
    return report.x / norms, report
