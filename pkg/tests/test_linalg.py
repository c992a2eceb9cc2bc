import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from coopreg import linalg
from coopreg.errors import NoConvergence, NotHurwitz, SpectraOverlap

from .oracles import kron_sylvester, match_spectra

M_CUBIC = np.array([[0.0, 1, 0], [0, 0, 1], [-8, -12, -6]])
PHI_CUBIC = np.array([[0.0, 1, 0], [0, 0, 1], [0, -1, 0]])
PSI3 = np.array([[1.0, 0, 0]])
S_MOTOR = np.array([[0.0, 1, 0], [-1, 0, 0], [0, 0, 0]])


def _rel_residual(X, A, B, C):
    return np.linalg.norm(X @ B - A @ X - C) / (1 + np.linalg.norm(C))


class TestSylvester:
    def test_internal_model_pair(self):
        T = linalg.solve_sylvester(M_CUBIC, PHI_CUBIC, np.array([[0.0], [0], [1]]) @ PSI3)
        assert_allclose(T[0], [0.125, -0.088, 0.109], atol=1e-3)
        assert_allclose(T[1, 1], 0.016, atol=1e-3)

    def test_scalar_identity(self):
        assert_allclose(linalg.solve_sylvester([[0.0]], [[1.0]], [[3.5]]), [[3.5]])

    def test_matches_kronecker_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            A = rng.standard_normal((3, 3)) - 4 * np.eye(3)
            B = rng.standard_normal((2, 2)) * 0.3 + 3 * np.eye(2)
            C = rng.standard_normal((3, 2))
            X = linalg.solve_sylvester(A, B, C)
            assert_allclose(X, kron_sylvester(A, B, C), atol=1e-12, rtol=0)
            assert _rel_residual(X, A, B, C) <= 1e-10

    def test_overlap_raises(self):
        with pytest.raises(SpectraOverlap):
            linalg.solve_sylvester([[1.0]], [[1.0]], [[1.0]])

    def test_empty_dimension(self):
        X = linalg.solve_sylvester(np.zeros((0, 0)), S_MOTOR, np.zeros((0, 3)))
        assert X.shape == (0, 3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
    def test_residual_property(self, n, m, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, n)) - 3 * np.eye(n)
        B = rng.standard_normal((m, m)) * 0.5 + 2 * np.eye(m)
        C = rng.standard_normal((n, m)) * 10
        X = linalg.solve_sylvester(A, B, C)
        assert _rel_residual(X, A, B, C) <= 1e-10


class TestLyapunov:
    def test_scalar(self):
        assert_allclose(linalg.solve_lyapunov([[-1.0]]), [[0.5]])

    def test_cubic_companion(self):
        P = linalg.solve_lyapunov(M_CUBIC)
        assert np.linalg.norm(M_CUBIC.T @ P + P @ M_CUBIC + np.eye(3)) < 1e-10
        assert np.min(np.linalg.eigvalsh(P)) > 0

    def test_rotation_is_rejected(self):
        with pytest.raises(NotHurwitz):
            linalg.solve_lyapunov([[0.0, 1], [-1, 0]])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_symmetric_positive(self, n, seed):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((n, n))
        M -= (np.max(np.linalg.eigvals(M).real) + 0.5) * np.eye(n)
        P = linalg.solve_lyapunov(M)
        assert np.max(np.abs(P - P.T)) <= 1e-10
        assert np.linalg.norm(M.T @ P + P @ M + np.eye(n)) <= 1e-10 * (1 + np.linalg.norm(P))
        x = rng.standard_normal((100, n))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        assert np.all(np.einsum("ij,jk,ik->i", x, P, x) > 0)


class TestMinimalPolynomial:
    def test_rotation_plus_integrator(self):
        assert_allclose(linalg.minimal_polynomial(S_MOTOR), [0.0, 1.0, 0.0], atol=1e-12)

    def test_zero(self):
        assert_allclose(linalg.minimal_polynomial([[0.0]]), [0.0])

    def test_repeated_eigenvalue_drops_degree(self):
        p = linalg.minimal_polynomial(np.diag([2.0, 2.0]))
        assert_allclose(p, [-2.0])
        assert np.linalg.norm(linalg.poly_eval(p, np.diag([2.0, 2.0]))) < 1e-12

    def test_jordan_block_keeps_degree(self):
        S = np.array([[0.0, 1], [0, 0]])
        assert_allclose(linalg.minimal_polynomial(S), [0.0, 0.0], atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
    def test_divides_characteristic(self, q, seed):
        rng = np.random.default_rng(seed)
        # block-diagonal with a repeated block so the degree can drop below q
        B = rng.integers(-2, 3, size=(2, 2)).astype(float)
        S = np.zeros((q, q))
        for i in range(0, q - 1, 2):
            S[i:i + 2, i:i + 2] = B
        if q % 2:
            S[-1, -1] = float(rng.integers(-2, 3))
        p = linalg.minimal_polynomial(S)
        nS = max(np.linalg.norm(S), 1.0)
        assert np.linalg.norm(linalg.poly_eval(p, S)) <= 1e-8 * nS ** p.size
        char = np.poly(S)
        _, rem = linalg.poly_divmod(char, np.r_[1.0, p[::-1]])
        assert np.all(np.abs(rem) < 1e-6)


class TestCompanion:
    def test_cubic(self):
        Phi, Psi = linalg.companion_pair([0.0, 1.0, 0.0], 3)
        assert_array_equal(Phi, PHI_CUBIC)
        assert_array_equal(Psi, PSI3)

    def test_quadratic(self):
        Phi, Psi = linalg.companion_pair([1.0, 0.0], 2)
        assert_array_equal(Phi, [[0, 1], [-1, 0]])
        assert_array_equal(Psi, [[1, 0]])

    def test_degree_one(self):
        Phi, Psi = linalg.companion_pair([0.0], 1)
        assert_array_equal(Phi, [[0.0]])
        assert_array_equal(Psi, [[1.0]])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
    def test_eigenvalues_are_roots(self, coeffs):
        Phi, _ = linalg.companion_pair(coeffs)
        lam = linalg.eigenvalues(Phi)
        scale = 1 + np.max(np.abs(lam)) ** len(coeffs)
        assert np.all(np.abs(linalg.poly_eval(coeffs, lam)) <= 1e-6 * scale)


class TestEigenvalues:
    def test_triple_root(self):
        # defective eigenvalue: QR accuracy is eps^(1/3)
        assert_allclose(linalg.eigenvalues(M_CUBIC), [-2, -2, -2], atol=1e-4)

    def test_identity(self):
        assert_allclose(linalg.eigenvalues(np.eye(3)), [1, 1, 1])

    def test_rotation(self):
        lam = linalg.eigenvalues([[0.0, 1], [-1, 0]])
        assert match_spectra(lam, [1j, -1j]) < 1e-14

    def test_empty(self):
        assert linalg.eigenvalues(np.zeros((0, 0))).size == 0

    def test_against_numpy(self):
        rng = np.random.default_rng(3)
        for n in range(1, 41, 3):
            A = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-2, 2)
            ref = np.linalg.eigvals(A)
            assert match_spectra(linalg.eigenvalues(A), ref) <= 1e-8 * np.max(np.abs(ref))

    def test_repeated_blocks(self):
        # semisimple eigenvalues of high multiplicity used to stall plain QR
        rng = np.random.default_rng(5)
        B = rng.standard_normal((3, 3))
        A = np.kron(np.eye(7), B)
        Q, _ = np.linalg.qr(rng.standard_normal(A.shape))
        A = Q @ A @ Q.T
        ref = np.linalg.eigvals(A)
        assert match_spectra(linalg.eigenvalues(A), ref) <= 1e-8 * np.max(np.abs(ref))

    def test_budget_exhaustion(self):
        tiny = linalg.Tolerances(qr_max_iter=0)
        with pytest.raises(NoConvergence):
            linalg.eigenvalues(np.random.default_rng(0).standard_normal((6, 6)), tiny)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
    def test_similarity_invariance(self, n, seed):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((n, n))
        Q = rng.standard_normal((n, n)) + n * np.eye(n)
        assert match_spectra(linalg.eigenvalues(M), linalg.eigenvalues(Q @ M @ np.linalg.inv(Q))) < 1e-6


class TestHurwitz:
    def test_cubic_companion(self):
        assert linalg.is_hurwitz(M_CUBIC)

    def test_identity(self):
        assert not linalg.is_hurwitz(np.eye(3))

    def test_margin(self):
        assert linalg.is_hurwitz([[-0.5]], margin=0.4)
        assert not linalg.is_hurwitz([[-0.5]], margin=0.6)

    @pytest.mark.parametrize("h", [0.1, 1.0, 14.0, 1e3])
    def test_observer_matrix(self, h):
        from coopreg.regulator import observer_matrices
        A0, _ = observer_matrices([4.0, 4.0], h)
        assert linalg.is_hurwitz(A0)

    def test_polynomial_check(self):
        assert linalg.poly_is_hurwitz([4.0, 4.0])
        assert not linalg.poly_is_hurwitz([-1.0, 4.0])
        assert linalg.poly_is_hurwitz([])
