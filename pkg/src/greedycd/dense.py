"""Column-major dense matrix and vector primitives.

Every inner product in the package goes through :func:`inner`, a compiled
sequential loop (index-ascending, no reassociation), so Gram entries served
from the cache and entries recomputed on demand agree to the last bit and
runs are reproducible for a fixed seed.
"""

import numpy as np
from numba import njit
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateInputError, NumericalError, UsageError

GRAM_MAX_COLS = 2000
GRAM_MAX_BYTES = 256 * 2**20


@njit(cache=True)
def _dot(x, y):
    acc = 0.0
    for i in range(x.shape[0]):
        acc += x[i] * y[i]
    return acc


@njit(cache=True)
def _gram_column(data, j, out):
    cj = data[:, j]
    for i in range(data.shape[1]):
        out[i] = _dot(data[:, i], cj)


@njit(cache=True)
def _gram(data):
    n = data.shape[1]
    G = np.empty((n, n))
    for j in range(n):
        cj = data[:, j]
        for i in range(j + 1):
            g = _dot(data[:, i], cj)
            G[i, j] = g
            G[j, i] = g
    return G


@njit(cache=True)
def _matvec(data, x):
    m, n = data.shape
    y = np.zeros(m)
    for j in range(n):
        xj = x[j]
        for i in range(m):
            y[i] += data[i, j] * xj
    return y


@njit(cache=True)
def _rmatvec(data, y):
    n = data.shape[1]
    out = np.empty(n)
    for j in range(n):
        out[j] = _dot(data[:, j], y)
    return out


def _as_vector(x, name="x"):
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] == 0:
        raise UsageError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    return v


class DenseMatrix:
    """Immutable m-by-n float64 matrix stored column-major (m >= n > 0).

    Parameters
    ----------
    data : array_like
        Two-dimensional values; copied into Fortran order.
    gram : {"auto", True, False}
        Whether to build the n-by-n Gram cache. ``"auto"`` builds it when
        ``n <= gram_max_cols`` and the cache fits in ``gram_max_bytes``.
    """

    def __init__(self, data, gram="auto", gram_max_cols=GRAM_MAX_COLS,
                 gram_max_bytes=GRAM_MAX_BYTES):
        arr = np.array(data, dtype=np.float64, order="F", copy=True)
        if arr.ndim != 2:
            raise UsageError(f"matrix data must be 2-D, got {arr.ndim}-D")
        m, n = arr.shape
        if n < 1 or m < n:
            raise UsageError(f"need m >= n > 0, got {m}x{n}")
        if not np.all(np.isfinite(arr)):
            raise UsageError("matrix contains non-finite values")
        arr.flags.writeable = False
        self.data = arr
        self._gram_policy = (gram, gram_max_cols, gram_max_bytes)
        self._gram = None
        if gram is True or (gram == "auto" and n <= gram_max_cols
                            and 8 * n * n <= gram_max_bytes):
            G = _gram(arr)
            G.flags.writeable = False
            self._gram = G

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @property
    def gram_cache(self):
        return self._gram

    def gram(self):
        """Full Gram matrix ``A^T A`` (the cache if present, else a fresh build)."""
        if self._gram is not None:
            return self._gram
        return _gram(self.data)

    def matvec(self, x):
        x = _as_vector(x)
        if x.shape[0] != self.n:
            raise UsageError(f"matvec needs length {self.n}, got {x.shape[0]}")
        return _matvec(self.data, x)

    def rmatvec(self, y):
        y = _as_vector(y)
        if y.shape[0] != self.m:
            raise UsageError(f"rmatvec needs length {self.m}, got {y.shape[0]}")
        return _rmatvec(self.data, y)

    def with_data(self, data):
        """New matrix with the same Gram caching policy."""
        gram, cols, nbytes = self._gram_policy
        return DenseMatrix(data, gram=gram, gram_max_cols=cols, gram_max_bytes=nbytes)

    def __repr__(self):
        cached = "cached" if self._gram is not None else "uncached"
        return f"DenseMatrix({self.m}x{self.n}, gram {cached})"


def _check_index(A, j):
    if isinstance(j, (bool, np.bool_)) or not isinstance(j, (int, np.integer)):
        raise UsageError(f"column index must be an integer, got {j!r}")
    if not 0 <= j < A.n:
        raise UsageError(f"column index {j} out of range for n={A.n}")
    return int(j)


def column(A, j):
    """Read-only view of column ``j`` (0-based), length m."""
    return A.data[:, _check_index(A, j)]


def inner(x, y):
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise UsageError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(_dot(x, y))


def column_norms(A):
    return np.array([np.sqrt(_dot(A.data[:, j], A.data[:, j])) for j in range(A.n)])


def normalize_columns(A_raw):
    """Scale every column to unit Euclidean norm.

    Returns ``(A_hat, norms)`` with ``A_raw = A_hat @ diag(norms)``; a solution
    ``y`` of the normalized problem maps back as ``x = y / norms``.
    """
    norms = column_norms(A_raw)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateInputError(
            f"column {int(zero[0])} is zero; matrix is not full column rank")
    return A_raw.with_data(A_raw.data / norms), norms


def gram_column(A, j):
    """``A^T A[:, j]``, served from the Gram cache when present."""
    j = _check_index(A, j)
    if A.gram_cache is not None:
        return A.gram_cache[:, j]
    out = np.empty(A.n)
    _gram_column(A.data, j, out)
    return out


def sigma_min(A, tol=1e-10, max_iter=20000):
    """Smallest singular value of ``A`` by inverse iteration on ``A^T A``.

    Iterates until the eigen-residual ``||G v - lam v||`` falls below
    ``tol * lam`` (relative accuracy ``tol`` on ``lam``, ``tol/2`` on the
    singular value), or below the rounding floor of ``G`` when that is larger.
    """
    G = np.array(A.gram())
    try:
        factor = cho_factor(G, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInputError("A^T A is not positive definite") from exc
    floor = 32 * np.finfo(float).eps * np.abs(G).sum(axis=1).max()
    v = np.random.default_rng(0).standard_normal(A.n)
    v /= np.linalg.norm(v)
    lam = res = np.nan
    for _ in range(max_iter):
        w = cho_solve(factor, v)
        v = w / np.linalg.norm(w)
        Gv = G @ v
        lam = float(v @ Gv)
        if not lam > floor:
            raise DegenerateInputError(
                f"A^T A is numerically singular (smallest eigenvalue ~ {lam:.3g})")
        res = float(np.linalg.norm(Gv - lam * v))
        if res <= max(tol * lam, floor):
            return float(np.sqrt(lam))
    raise NumericalError("inverse iteration did not converge",
                         iterations=max_iter, rayleigh=lam, residual=res, tol=tol)
