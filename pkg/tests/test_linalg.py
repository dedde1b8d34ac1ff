import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schurstates.errors import DimensionError, DomainError
from schurstates.linalg import (
    hadamard,
    hermitian_function,
    is_psd,
    matrix_exp,
    matrix_log,
    psd_report,
)
from schurstates.sampling import complex_gaussian, rng_from_seed

from conftest import gram_psd_matrix


class TestHadamard:
    def test_all_ones_is_identity(self, rng):
        a = complex_gaussian(rng, (3, 3))
        j = np.ones((3, 3))
        np.testing.assert_allclose(hadamard(j, a), a)
        np.testing.assert_allclose(hadamard(a, j), a)

    def test_entrywise_values(self):
        a = [[1, 2], [3, 4]]
        b = [[5, 6], [7, 8]]
        np.testing.assert_allclose(hadamard(a, b), [[5, 12], [21, 32]])

    def test_commutes(self, rng):
        a = complex_gaussian(rng, (4, 4))
        b = complex_gaussian(rng, (4, 4))
        np.testing.assert_allclose(hadamard(a, b), hadamard(b, a))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            hadamard(np.ones((2, 2)), np.ones((2, 3)))


class TestPsd:
    def test_identity(self):
        rep = psd_report(np.eye(3), tol=1e-12)
        assert rep.is_psd
        assert rep.min_eigenvalue == pytest.approx(1.0)

    def test_indefinite_2x2(self):
        # eigenvalues of [[1,2],[2,1]] are 3 and -1
        rep = psd_report(np.array([[1.0, 2.0], [2.0, 1.0]]), tol=1e-12)
        assert not rep.is_psd
        assert rep.min_eigenvalue == pytest.approx(-1.0)

    def test_gram_matrices_are_psd(self):
        rng = rng_from_seed(5)
        for _ in range(25):
            g = gram_psd_matrix(rng, int(rng.integers(2, 7)))
            rep = psd_report(g)
            assert rep.is_psd, rep
            # independent eigendecomposition oracle
            assert np.linalg.eigvalsh(g)[0] >= -1e-10 * np.linalg.norm(g)

    def test_non_hermitian_rejected(self):
        rep = psd_report(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert not rep.hermitian
        assert not rep.is_psd

    def test_unitary_conjugation_invariance(self, rng):
        from schurstates.sampling import random_unitary

        g = gram_psd_matrix(rng, 4)
        u = random_unitary(rng, 4)
        assert is_psd(g) == is_psd(u @ g @ u.conj().T)
        bad = g - 2.0 * np.linalg.eigvalsh(g)[-1] * np.eye(4)
        assert is_psd(bad) == is_psd(u @ bad @ u.conj().T) == False  # noqa: E712

    def test_non_square(self):
        with pytest.raises(DimensionError):
            psd_report(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=2, max_value=6))
def test_hadamard_of_psd_is_psd(seed, n):
    rng = rng_from_seed(seed)
    a = gram_psd_matrix(rng, n)
    b = gram_psd_matrix(rng, n)
    rep = psd_report(hadamard(a, b))
    assert rep.min_eigenvalue >= -1e-10 * max(1.0, rep.max_abs_eigenvalue)


class TestHermitianFunction:
    def test_exp_of_zero(self):
        np.testing.assert_allclose(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_exp_diagonal(self):
        out = matrix_exp(np.diag([1.0, -2.0]))
        np.testing.assert_allclose(out, np.diag([np.e, np.exp(-2.0)]))

    def test_log_exp_roundtrip(self):
        rng = rng_from_seed(17)
        for _ in range(10):
            t = gram_psd_matrix(rng, 4) + 0.3 * np.eye(4)
            back = matrix_exp(matrix_log(t))
            assert np.max(np.abs(back - t)) <= 1e-10 * np.linalg.norm(t)

    def test_identity_function_reproduces_input(self, rng):
        t = gram_psd_matrix(rng, 5)
        out = hermitian_function(t, lambda w: w)
        assert np.max(np.abs(out - t)) <= 1e-12 * np.linalg.norm(t)

    def test_log_rejects_singular(self):
        with pytest.raises(DomainError):
            matrix_log(np.diag([1.0, 0.0]))

    def test_rejects_non_hermitian(self, rng):
        m = complex_gaussian(rng, (3, 3))
        m = m + 10 * np.eye(3)
        with pytest.raises(DomainError):
            hermitian_function(m, np.exp)

    def test_result_is_hermitian(self, rng):
        t = gram_psd_matrix(rng, 4) + 0.2 * np.eye(4)
        out = matrix_log(t)
        np.testing.assert_allclose(out, out.conj().T)
