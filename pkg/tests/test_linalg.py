import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermimo.errors import NonPSDError, NonSymmetricError, SingularMatrixError
from hypermimo.linalg import from_real_vector, psd_sqrt, solve_regularized, to_real_composite, to_real_vector


def gauss_solve(M, b):
    """Gaussian elimination with partial pivoting on Python floats."""
    n = len(b)
    aug = [list(map(float, M[i])) + [float(b[i])] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(col + 1, n):
            f = aug[r][col] / aug[col][col]
            for c in range(col, n + 1):
                aug[r][c] -= f * aug[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (aug[r][n] - sum(aug[r][c] * x[c] for c in range(r + 1, n))) / aug[r][r]
    return np.array(x)


def complex_matrices(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestRealComposite:
    def test_identity(self):
        np.testing.assert_array_equal(to_real_composite([[1 + 0j]]), [[1, 0], [0, 1]])

    def test_rotation(self):
        np.testing.assert_array_equal(to_real_composite([[1j]]), [[0, -1], [1, 0]])

    def test_commutes_with_vector_map(self):
        H = np.array([[1 + 2j]])
        v = np.array([3 - 1j])
        np.testing.assert_array_equal(to_real_composite(H), [[1, -2], [2, 1]])
        expected = H @ v  # (1+2j)(3-1j) = 5+5j
        np.testing.assert_allclose(to_real_composite(H) @ to_real_vector(v), to_real_vector(expected))
        np.testing.assert_allclose(to_real_vector(expected), [5, 5])

    def test_vector_round_trip(self):
        np.testing.assert_array_equal(to_real_vector([1 + 2j]), [1, 2])
        np.testing.assert_array_equal(from_real_vector([1, 2]), [1 + 2j])

    def test_ring_homomorphism(self, rng):
        for _ in range(20):
            A = complex_matrices(rng, 4, 2)
            B = complex_matrices(rng, 2, 3)
            np.testing.assert_allclose(
                to_real_composite(A @ B), to_real_composite(A) @ to_real_composite(B), atol=1e-12
            )

    def test_batched(self, rng):
        H = complex_matrices(rng, 5, 4, 2)
        out = to_real_composite(H)
        assert out.shape == (5, 8, 4)
        np.testing.assert_array_equal(out[3], to_real_composite(H[3]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
    def test_vector_round_trip_property(self, values):
        v = np.array(values)
        np.testing.assert_array_equal(from_real_vector(to_real_vector(v)), v)


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_two_by_two(self):
        R = np.array([[1.0, 0.6], [0.6, 1.0]])
        S = psd_sqrt(R)
        assert np.linalg.norm(S @ S - R) <= 1e-10 * np.linalg.norm(R)
        np.testing.assert_allclose(S, S.T)

    def test_random_gram_matrices(self, rng):
        for _ in range(100):
            n = rng.integers(1, 9)
            G = rng.standard_normal((rng.integers(1, 9), n))
            R = G.T @ G
            S = psd_sqrt(R)
            assert np.linalg.norm(S @ S - R) <= 1e-10 * np.linalg.norm(R)
            assert np.linalg.eigvalsh(S).min() >= -1e-10

    def test_rank_deficient(self):
        R = np.ones((3, 3))
        S = psd_sqrt(R)
        np.testing.assert_allclose(S @ S, R, atol=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(NonSymmetricError):
            psd_sqrt(np.array([[1.0, 0.5], [0.4, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(NonPSDError):
            psd_sqrt(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestSolveRegularized:
    def test_identity(self):
        np.testing.assert_allclose(solve_regularized(np.eye(2), 0.0, [1.0, 2.0]), [1, 2])

    def test_ridge_identity(self):
        np.testing.assert_allclose(solve_regularized(np.eye(2), 1.0, [2.0, 2.0]), [1, 1])

    def test_against_elimination_oracle(self, rng):
        for _ in range(10):
            A = rng.standard_normal((8, 4))
            b = rng.standard_normal(8)
            expected = gauss_solve(A.T @ A + 0.05 * np.eye(4), A.T @ b)
            np.testing.assert_allclose(solve_regularized(A, 0.05, b), expected, rtol=1e-9, atol=1e-12)

    def test_square_system(self, rng):
        A = rng.standard_normal((5, 5))
        b = rng.standard_normal(5)
        x = solve_regularized(A, 0.0, b)
        assert np.linalg.norm(A @ x - b) <= 1e-9 * np.linalg.norm(b)

    def test_singular(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(SingularMatrixError):
            solve_regularized(A, 0.0, [1.0, 1.0, 1.0])
        solve_regularized(A, 0.1, [1.0, 1.0, 1.0])

    def test_batched_matches_loop(self, rng):
        A = rng.standard_normal((6, 8, 4))
        b = rng.standard_normal((6, 8))
        lam = rng.uniform(0.1, 1.0, size=6)
        out = solve_regularized(A, lam, b)
        for i in range(6):
            np.testing.assert_allclose(out[i], solve_regularized(A[i], lam[i], b[i]))
