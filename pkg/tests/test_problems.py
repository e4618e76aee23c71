import math

import numpy as np
import pytest

from greedycd import (DegenerateInputError, DenseMatrix, GenerationError, GenSpec, UsageError,
                      coherence, column_norms, generate_matrix, generate_problem, make_rhs,
                      make_solution)
from greedycd.problems import orthonormal_basis

from conftest import R2, qr_lstsq, rse


class TestGenSpec:
    @pytest.mark.parametrize("m,n", [(3, 3), (2, 3), (5, 1)])
    def test_shape_rules(self, m, n):
        with pytest.raises(UsageError):
            GenSpec(m, n, 0.5)

    @pytest.mark.parametrize("c", [1.0, 1.5, -1.0])
    def test_interval_rules(self, c):
        with pytest.raises(UsageError):
            GenSpec(10, 3, c)

    def test_seed_range(self):
        GenSpec(10, 3, 0.0, seed=2**64 - 1)
        with pytest.raises(UsageError):
            GenSpec(10, 3, 0.0, seed=2**64)


class TestGenerateMatrix:
    def test_high_coherence_band(self):
        stats = coherence(generate_matrix(GenSpec(500, 100, 0.9, seed=11)))
        assert 0.995 <= stats.delta < 1.0
        assert 0.995 <= stats.Delta < 1.0
        assert stats.delta <= stats.Delta

    def test_low_coherence_band(self):
        stats = coherence(generate_matrix(GenSpec(500, 100, -0.8, seed=11)))
        assert stats.delta <= 0.05
        assert stats.Delta <= 0.5

    def test_deterministic(self):
        spec = GenSpec(40, 8, 0.3, seed=5)
        np.testing.assert_array_equal(generate_matrix(spec).data, generate_matrix(spec).data)

    def test_unit_columns(self):
        A = generate_matrix(GenSpec(60, 12, 0.95, seed=2))
        norms = column_norms(A)
        assert norms.min() >= 1 - 1e-10 and norms.max() <= 1 + 1e-10

    def test_entries_come_from_interval(self):
        # before normalization all entries lie in [c, 1]; signs survive scaling
        A = generate_matrix(GenSpec(50, 5, 0.2, seed=0))
        assert (A.data > 0).all()


class TestCoherence:
    def test_orthonormal(self):
        Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 4)))
        stats = coherence(DenseMatrix(Q))
        assert stats.delta == pytest.approx(0, abs=1e-15)
        assert stats.Delta == pytest.approx(0, abs=1e-15)
        assert stats.rank == 4

    def test_two_columns_at_45_degrees(self, skew32):
        stats = coherence(skew32)
        assert stats.delta == pytest.approx(1 / R2, abs=1e-12)
        assert stats.Delta == pytest.approx(1 / R2, abs=1e-12)

    def test_equal_columns_rejected(self):
        A = DenseMatrix([[1 / R2, 1 / R2], [1 / R2, 1 / R2], [0.0, 0.0]])
        with pytest.raises(DegenerateInputError):
            coherence(A)

    def test_single_column(self):
        with pytest.raises(UsageError):
            coherence(DenseMatrix([[1.0], [0.0]]))

    def test_non_unit_columns(self):
        with pytest.raises(UsageError):
            coherence(DenseMatrix([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))

    def test_monotone_trend_in_c(self):
        means = {}
        for c in (0.9, 0.8, -0.1):
            means[c] = np.mean([coherence(generate_matrix(GenSpec(100, 20, c, seed=s))).delta
                                for s in range(10)])
        assert means[0.9] > means[0.8] > means[-0.1]


class TestMakeSolution:
    def test_deterministic(self):
        np.testing.assert_array_equal(make_solution(50, 3), make_solution(50, 3))

    def test_moments(self):
        x = make_solution(10_000, 123)
        assert abs(x.mean()) <= 5 / math.sqrt(10_000)
        assert 0.9 <= x.var() <= 1.1


class TestMakeRhs:
    def test_consistent_is_exact(self):
        spec = GenSpec(30, 6, 0.5, seed=1)
        A = generate_matrix(spec)
        x = make_solution(6, 1)
        b = make_rhs(A, x, spec)
        assert np.linalg.norm(b - A.matvec(x)) == 0.0

    def test_inconsistent_null_space(self):
        spec = GenSpec(500, 100, 0.9, consistent=False, seed=1)
        A = generate_matrix(spec)
        x = make_solution(100, 1)
        b = make_rhs(A, x, spec)
        b0 = b - A.matvec(x)
        assert np.max(np.abs(A.rmatvec(b0))) <= 1e-10
        assert np.linalg.norm(b0) > 0
        assert np.linalg.norm(b0) == pytest.approx(0.1 * np.linalg.norm(A.matvec(x)), rel=1e-12)

    def test_square_exhausts_retries(self):
        A = DenseMatrix(np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)))[0])
        spec = GenSpec(4, 3, 0.5, consistent=False)
        with pytest.raises(GenerationError):
            make_rhs(A, np.ones(3), spec)

    def test_magnitude_knob(self):
        spec = GenSpec(40, 5, 0.0, consistent=False, inconsistency_magnitude=2.5)
        A = generate_matrix(spec)
        x = make_solution(5, 0)
        b0 = make_rhs(A, x, spec) - A.matvec(x)
        assert np.linalg.norm(b0) == pytest.approx(2.5 * np.linalg.norm(A.matvec(x)), rel=1e-12)


def test_orthonormal_basis_coherent():
    A = generate_matrix(GenSpec(200, 40, 0.95, seed=3))
    Q = orthonormal_basis(A)
    np.testing.assert_allclose(Q.T @ Q, np.eye(40), atol=1e-13)
    # same column space: projecting A onto span(Q) leaves it unchanged
    np.testing.assert_allclose(Q @ (Q.T @ A.data), A.data, atol=1e-12)


class TestGenerateProblem:
    @pytest.mark.parametrize("consistent", [True, False])
    def test_invariants(self, consistent):
        p, stats = generate_problem(GenSpec(500, 100, 0.9, consistent=consistent, seed=7))
        norms = column_norms(p.A)
        assert norms.min() >= 1 - 1e-10 and norms.max() <= 1 + 1e-10
        r = p.b - p.A.matvec(p.x_star)
        if consistent:
            assert np.linalg.norm(r) <= 1e-10 * np.linalg.norm(p.b)
        else:
            assert np.max(np.abs(p.A.rmatvec(r))) <= 1e-10
        assert stats.rank == 100
        assert 0 <= stats.delta <= stats.Delta <= 1

    def test_inconsistent_matches_qr_oracle(self):
        p, _ = generate_problem(GenSpec(500, 100, 0.9, consistent=False, seed=7))
        assert rse(qr_lstsq(p.A, p.b), p.x_star) <= 1e-20

    def test_seeds_differ(self):
        _, s1 = generate_problem(GenSpec(60, 10, 0.5, seed=1))
        _, s2 = generate_problem(GenSpec(60, 10, 0.5, seed=2))
        assert s1.delta != s2.delta

    def test_pure_function_of_spec(self):
        spec = GenSpec(60, 10, 0.5, consistent=False, seed=9)
        p1, s1 = generate_problem(spec)
        p2, s2 = generate_problem(spec)
        np.testing.assert_array_equal(p1.A.data, p2.A.data)
        np.testing.assert_array_equal(p1.b, p2.b)
        np.testing.assert_array_equal(p1.x_star, p2.x_star)
        assert s1 == s2
