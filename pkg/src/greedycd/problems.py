"""Random least-squares test problems with controlled column coherence.

Matrices have i.i.d. entries uniform on ``[c, 1]`` followed by column
normalization; pushing ``c`` towards 1 makes the columns nearly parallel.

Random streams come from numpy's PCG64 bit generator. Each GenSpec seed is
split into independent streams with ``SeedSequence([seed, stream])`` where
stream 0 draws the matrix, 1 the solution and 2 the null-space component of
an inconsistent right-hand side. Normal variates use numpy's ziggurat
sampler (``Generator.standard_normal``).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .dense import DenseMatrix, _dot, column_norms, normalize_columns, sigma_min
from .errors import DegenerateInputError, GenerationError, UsageError

MATRIX_STREAM = 0
SOLUTION_STREAM = 1
RHS_STREAM = 2
MAX_RETRIES = 5
RANK_TOL = 1e-12
UNIT_TOL = 1e-8


def _rng(seed, stream):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise UsageError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise UsageError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return int(seed)


@dataclass(frozen=True)
class GenSpec:
    m: int
    n: int
    c: float
    consistent: bool = True
    seed: int = 0
    inconsistency_magnitude: float = 0.1

    def __post_init__(self):
        if not (self.m > self.n >= 2):
            raise UsageError(f"need m > n >= 2, got m={self.m}, n={self.n}")
        if not -1.0 < self.c < 1.0:
            raise UsageError(f"c must lie in (-1, 1), got {self.c}")
        if not self.inconsistency_magnitude > 0:
            raise UsageError("inconsistency_magnitude must be positive")
        _check_seed(self.seed)


@dataclass
class Problem:
    """A least-squares instance ``min ||b - A x||``.

    ``x_star`` is the known least-squares solution when the problem was
    generated; it is ``None`` for user-supplied systems.
    """

    A: DenseMatrix
    b: np.ndarray
    x_star: Optional[np.ndarray] = None
    consistent: bool = True

    def __post_init__(self):
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        if self.b.shape != (self.A.m,):
            raise UsageError(f"b has shape {self.b.shape}, expected ({self.A.m},)")
        if self.x_star is not None:
            self.x_star = np.ascontiguousarray(self.x_star, dtype=np.float64)
            if self.x_star.shape != (self.A.n,):
                raise UsageError(
                    f"x_star has shape {self.x_star.shape}, expected ({self.A.n},)")


@dataclass(frozen=True)
class CoherenceStats:
    delta: float
    Delta: float
    rank: int
    sigma_min: float


def _require_unit_columns(A):
    norms = column_norms(A)
    if np.max(np.abs(norms - 1.0)) > UNIT_TOL:
        raise UsageError("matrix columns must have unit norm")


def generate_matrix(spec):
    """Uniform ``[c, 1]`` matrix with normalized columns and verified full rank."""
    for attempt in range(MAX_RETRIES):
        raw = _rng(spec.seed + attempt, MATRIX_STREAM).uniform(spec.c, 1.0, (spec.m, spec.n))
        try:
            A_hat, _ = normalize_columns(DenseMatrix(raw, gram=False))
        except DegenerateInputError:
            continue
        A = DenseMatrix(A_hat.data)
        try:
            if sigma_min(A) > RANK_TOL:
                return A
        except DegenerateInputError:
            pass
    raise GenerationError(
        f"{MAX_RETRIES} consecutive rank-deficient draws starting at seed {spec.seed}")


def coherence(A):
    """Min and max absolute off-diagonal Gram entries, plus rank data."""
    if A.n < 2:
        raise UsageError("coherence needs at least two columns")
    _require_unit_columns(A)
    G = A.gram()
    eig = np.linalg.eigvalsh(G)
    sv = np.sqrt(np.clip(eig, 0.0, None))
    rank = int(np.count_nonzero(sv > RANK_TOL * sv.max()))
    if rank < A.n:
        raise DegenerateInputError(f"matrix has rank {rank} < n={A.n}")
    off = np.abs(G[~np.eye(A.n, dtype=bool)])
    return CoherenceStats(delta=float(off.min()), Delta=float(off.max()),
                          rank=rank, sigma_min=sigma_min(A))


def make_solution(n, seed):
    if n < 1:
        raise UsageError(f"n must be positive, got {n}")
    return _rng(_check_seed(seed), SOLUTION_STREAM).standard_normal(n)


@njit(cache=True)
def _mgs2(Q):
    # in-place modified Gram-Schmidt with one re-orthogonalization pass;
    # returns the index of the first dependent column, or -1
    n = Q.shape[1]
    for j in range(n):
        v = Q[:, j]
        scale = np.sqrt(_dot(v, v))
        for _ in range(2):
            for i in range(j):
                qi = Q[:, i]
                v -= _dot(qi, v) * qi
        nv = np.sqrt(_dot(v, v))
        if nv <= 1e-12 * scale:
            return j
        v /= nv
    return -1


def orthonormal_basis(A):
    """Orthonormal basis of ``range(A)`` (m-by-n, column-major)."""
    Q = np.array(A.data, order="F", copy=True)
    bad = _mgs2(Q)
    if bad >= 0:
        raise DegenerateInputError(f"column {bad} is dependent on earlier columns")
    return Q


def _project_out(Q, z):
    for _ in range(2):
        z = z - Q @ (Q.T @ z)
    return z


def make_rhs(A, x_star, spec):
    """Right-hand side ``A x*`` or ``A x* + b0`` with ``b0`` in ``null(A^T)``.

    ``b0`` is a seeded normal vector with its ``range(A)`` component removed,
    rescaled to ``spec.inconsistency_magnitude * ||A x*||``.
    """
    x_star = np.ascontiguousarray(x_star, dtype=np.float64)
    if x_star.shape != (A.n,):
        raise UsageError(f"x_star has shape {x_star.shape}, expected ({A.n},)")
    Ax = A.matvec(x_star)
    if spec.consistent:
        return Ax
    Q = orthonormal_basis(A)
    target = spec.inconsistency_magnitude * np.linalg.norm(Ax)
    for attempt in range(MAX_RETRIES):
        z = _rng(spec.seed + attempt, RHS_STREAM).standard_normal(A.m)
        b0 = _project_out(Q, z)
        nb0 = np.linalg.norm(b0)
        if nb0 < 1e-12 * np.linalg.norm(z):
            continue
        b0 *= target / nb0
        leak = np.max(np.abs(A.rmatvec(b0)))
        if leak > 1e-10:
            continue
        return Ax + b0
    raise GenerationError(
        f"could not draw a null(A^T) component in {MAX_RETRIES} attempts "
        f"(m={A.m}, n={A.n})")


def generate_problem(spec):
    """Compose matrix, solution and right-hand side; returns ``(Problem, CoherenceStats)``."""
    A = generate_matrix(spec)
    x_star = make_solution(spec.n, spec.seed)
    b = make_rhs(A, x_star, spec)
    return Problem(A, b, x_star, spec.consistent), coherence(A)
