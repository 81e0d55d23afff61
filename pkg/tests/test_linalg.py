import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import matrices, seeds
from dlds.errors import DimensionError, DomainError
from dlds.linalg import (expm, expm_and_frechet, expm_frechet, expm_frechet_adjoint,
                         frobenius_norm, operator_norm)

# 30-term Taylor series of expm([[0, -0.5], [0.5, 0]]) in 40-digit arithmetic
TAYLOR_ROT_HALF = np.array([[0.87758256189037271612, -0.47942553860420300027],
                            [0.47942553860420300027, 0.87758256189037271612]])


def taylor_expm(A, terms=60):
    """Reference exponential by plain power series (only for small norms)."""
    out = np.eye(len(A))
    term = np.eye(len(A))
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestExpm:
    def test_zero_gives_identity(self):
        np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(expm(np.diag([1.0, -1.0])), np.diag([np.e, 1 / np.e]), rtol=1e-14)

    def test_rotation_matches_taylor_oracle(self):
        A = np.array([[0.0, -0.5], [0.5, 0.0]])
        assert rel(expm(A), TAYLOR_ROT_HALF) < 1e-14

    @pytest.mark.parametrize("scale", [1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0])
    def test_against_power_series(self, scale, rng):
        # covers every Pade degree; the series is reliable at these norms
        A = rng.standard_normal((4, 4))
        A *= scale / np.abs(A).sum(axis=0).max()
        assert rel(expm(A), taylor_expm(A)) < 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_accuracy_up_to_norm_ten(self, seed):
        # scipy's independent implementation serves as cross-check at large norms
        from scipy.linalg import expm as scipy_expm
        A = np.random.default_rng(seed).standard_normal((5, 5))
        A *= 10.0 / np.linalg.norm(A, 2)
        assert rel(expm(A), scipy_expm(A)) < 1e-10

    def test_non_square(self):
        with pytest.raises(DimensionError):
            expm(np.zeros((2, 3)))

    def test_non_finite(self):
        with pytest.raises(DomainError):
            expm(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_empty(self):
        assert expm(np.zeros((0, 0))).shape == (0, 0)

    @given(matrices(3, -1.5, 1.5))
    def test_inverse_identity(self, A):
        assert np.abs(expm(A) @ expm(-A) - np.eye(3)).max() < 1e-8

    @given(matrices(3), st.floats(-2, 2), st.floats(-2, 2))
    def test_semigroup(self, A, s, t):
        lhs = expm((s + t) * A)
        rhs = expm(s * A) @ expm(t * A)
        assert np.abs(lhs - rhs).max() < 1e-8 * max(1.0, np.abs(lhs).max())

    @given(matrices(4))
    def test_commutes_with_argument(self, A):
        E = expm(A)
        assert np.abs(A @ E - E @ A).max() < 1e-10 * max(1.0, np.abs(E).max())

    @given(matrices(3, -3, 3))
    def test_determinant_is_exp_trace(self, A):
        assert np.isclose(np.linalg.det(expm(A)), np.exp(np.trace(A)), rtol=1e-9)


class TestFrechet:
    def test_at_zero_is_identity_map(self, rng):
        E = rng.standard_normal((3, 3))
        np.testing.assert_allclose(expm_frechet(np.zeros((3, 3)), E), E, atol=1e-14)

    def test_commuting_diagonal(self):
        a = np.array([0.3, -1.2, 2.0])
        e = np.array([1.0, 0.5, -2.0])
        np.testing.assert_allclose(expm_frechet(np.diag(a), np.diag(e)), np.diag(np.exp(a) * e),
                                   rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_central_difference(self, seed):
        r = np.random.default_rng(seed)
        A = r.standard_normal((4, 4))
        A /= np.linalg.norm(A, 2)
        E = r.standard_normal((4, 4))
        h = 1e-5
        fd = (expm(A + h * E) - expm(A - h * E)) / (2 * h)
        assert np.abs(expm_frechet(A, E) - fd).max() < 1e-6

    def test_zero_direction(self, rng):
        A = rng.standard_normal((3, 3))
        assert np.all(expm_frechet(A, np.zeros((3, 3))) == 0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            expm_frechet(np.eye(2), np.eye(3))

    def test_combined_call(self, rng):
        A, E = rng.standard_normal((2, 3, 3))
        X, L = expm_and_frechet(A, E)
        assert rel(X, expm(A)) < 1e-13
        assert rel(L, expm_frechet(A, E)) < 1e-15

    @given(matrices(3), matrices(3), matrices(3), st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_in_direction(self, A, E1, E2, a, b):
        lhs = expm_frechet(A, a * E1 + b * E2)
        rhs = a * expm_frechet(A, E1) + b * expm_frechet(A, E2)
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(rhs).max())

    @given(matrices(3), matrices(3), matrices(3))
    def test_adjoint_identity(self, A, E, W):
        lhs = np.sum(expm_frechet(A, E) * W)
        rhs = np.sum(E * expm_frechet_adjoint(A, W))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


class TestNorms:
    def test_identity(self):
        assert operator_norm(np.eye(5)) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        assert operator_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, rel=1e-12)

    @pytest.mark.parametrize("shape", [(5, 5), (3, 7), (40, 30)])
    def test_against_svd(self, shape, rng):
        A = rng.standard_normal(shape)
        assert operator_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)

    def test_zero_matrix(self):
        assert operator_norm(np.zeros((3, 3))) == 0.0
        assert operator_norm(np.zeros((20, 20))) == 0.0

    def test_empty(self):
        with pytest.raises(DomainError):
            operator_norm(np.zeros((0, 3)))

    @given(seeds, st.floats(-10, 10))
    def test_homogeneous(self, seed, alpha):
        A = np.random.default_rng(seed).standard_normal((4, 4))
        assert abs(operator_norm(alpha * A) - abs(alpha) * operator_norm(A)) < 1e-10 * max(1.0, abs(alpha) * operator_norm(A))

    @given(seeds)
    def test_power_iteration_path(self, seed):
        A = np.random.default_rng(seed).standard_normal((20, 20))
        assert operator_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)

    def test_frobenius_examples(self):
        assert frobenius_norm(np.zeros((2, 2))) == 0.0
        assert frobenius_norm(np.eye(4)) == 2.0
        assert frobenius_norm([[3.0, 4.0], [0.0, 0.0]]) == 5.0
