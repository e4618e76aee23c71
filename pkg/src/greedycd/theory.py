"""Runtime checks of the GDSCD convergence analysis.

For unit-column ``A`` and error ``e_k = x* - x_k`` the energy
``||A e_k||^2`` drops by exactly ``(s_k[j1])^2`` on a greedy step and by
``(s_k[j1])^2 / (1 - mu_k^2)`` on a two-hyperplane step, where ``mu_k`` is
the inner product of the two pivot columns. The per-step contraction factor
is bounded by ``1 - sigma^2 / (1 - mu_k^2)`` with ``sigma`` any lower bound
of the Hoffman-like constant ``min ||A^T z||_inf`` over unit ``z`` in
``range(A)``.

The constant itself has no cheap exact algorithm. We certify
``sigma_min(A) / sqrt(n)``, which follows from ``||y||_inf >= ||y||_2 / sqrt(n)``
and ``||A^T z||_2 >= sigma_min(A) ||z||_2`` on ``range(A)``, and optionally
bracket the constant from above by random sampling. Note that
``||e||_{A^T A}^2 = ||A e||^2``, so auditing ``||A e||^2`` is the same thing.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import column, sigma_min
from .errors import UsageError
from .solvers import Method

ENERGY_FLOOR = 1e-28
RATIO_SLACK = 1e-12
IDENTITY_RTOL = 1e-9
IDENTITY_RTOL_INCONSISTENT = 1e-8


class BoundDerivation(str, enum.Enum):
    SIGMA_MIN_OVER_SQRT_N = "sigma_min_over_sqrt_n"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class HoffmanBound:
    sigma_lb: float
    derivation: BoundDerivation
    sampled_upper: Optional[float] = None


@dataclass
class ContractionRecord:
    k: int
    mu_tilde: Optional[float]
    observed_ratio: float
    bound: float
    decrement_expected: float
    decrement_observed: float
    energy_before: float
    identity_rtol: float = IDENTITY_RTOL
    v_orth: Optional[float] = None
    v_norm_dev: Optional[float] = None

    @property
    def decrement_gap(self):
        return self.decrement_observed - self.decrement_expected

    @property
    def ratio_violation(self):
        return self.observed_ratio > self.bound + RATIO_SLACK

    @property
    def identity_violation(self):
        return abs(self.decrement_gap) > self.identity_rtol * self.energy_before

    @property
    def violation(self):
        return self.ratio_violation or self.identity_violation


def hoffman_lower_bound(A, samples=0, seed=0, chunk=1024):
    """Certified lower bound ``sigma_min(A)/sqrt(n)`` on the Hoffman-like constant.

    With ``samples > 0`` also returns ``min ||A^T z||_inf`` over that many
    random unit vectors ``z`` in ``range(A)``, an upper bracket.
    """
    lb = sigma_min(A) / math.sqrt(A.n)
    if samples <= 0:
        return HoffmanBound(lb, BoundDerivation.SIGMA_MIN_OVER_SQRT_N)
    rng = np.random.default_rng(seed)
    G = A.gram()
    best = np.inf
    left = samples
    while left > 0:
        size = min(chunk, left)
        Y = rng.standard_normal((A.n, size))
        Z_norm = np.linalg.norm(A.data @ Y, axis=0)
        vals = np.max(np.abs(G @ Y), axis=0) / Z_norm
        best = min(best, float(vals.min()))
        left -= size
    return HoffmanBound(lb, BoundDerivation.SAMPLED, sampled_upper=best)


def auxiliary_direction(A, j1, j2, mu):
    """Unit vector in ``span{A_j1, A_j2}`` orthogonal to ``A_j1``."""
    return (column(A, j2) - mu * column(A, j1)) / math.sqrt(1.0 - mu * mu)


def contraction_audit(report, problem, bound):
    """Check every traced step of a GCD or GDSCD run against the exact identities.

    Needs a trace recorded at every iteration with energies
    (``trace_every=1, trace_energy=True``). Rows whose starting energy is
    below ``ENERGY_FLOOR`` are skipped.
    """
    if report.method not in (Method.GCD, Method.GDSCD):
        raise UsageError(f"audit supports gcd and gdscd runs, not {report.method.value}")
    if problem.x_star is None:
        raise UsageError("audit needs the known solution x_star")
    rows = report.trace
    for prev, nxt in zip(rows, rows[1:]):
        if nxt.k != prev.k + 1:
            raise UsageError("audit needs a trace recorded at every iteration")
    if any(r.energy_sq is None for r in rows):
        raise UsageError("audit needs energy_sq in every trace row")

    A = problem.A
    rtol = IDENTITY_RTOL if problem.consistent else IDENTITY_RTOL_INCONSISTENT
    sig2 = bound.sigma_lb ** 2
    records = []
    for row, nxt in zip(rows, rows[1:]):
        if row.j1 is None or row.energy_sq <= ENERGY_FLOOR:
            continue
        e0, e1 = row.energy_sq, nxt.energy_sq
        two_plane = report.method is Method.GDSCD and row.mu_tilde is not None
        v_orth = v_norm_dev = None
        if two_plane:
            gap = 1.0 - row.mu_tilde ** 2
            expected = row.s_inf ** 2 / gap
            limit = 1.0 - sig2 / gap
            v = auxiliary_direction(A, row.j1, row.j2, row.mu_tilde)
            v_orth = abs(float(v @ column(A, row.j1)))
            v_norm_dev = abs(float(np.linalg.norm(v)) - 1.0)
        else:
            expected = row.s_inf ** 2
            limit = 1.0 - sig2
        records.append(ContractionRecord(
            k=row.k, mu_tilde=row.mu_tilde if two_plane else None,
            observed_ratio=e1 / e0, bound=limit,
            decrement_expected=expected, decrement_observed=e0 - e1,
            energy_before=e0, identity_rtol=rtol,
            v_orth=v_orth, v_norm_dev=v_norm_dev))
    return records
