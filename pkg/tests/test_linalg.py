"""Tests for the dense symmetric linear algebra helpers.

Reference values for centering and pseudoinversion come from explicit
textbook formulas recomputed in oracles.py; agreement is checked against
those rather than against the functions under test.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from meanparity.errors import DimensionError
from meanparity.linalg import (
    center_gram,
    centering_matrix,
    numerical_rank,
    pinv,
    sym_eig,
)
from oracles import center_gram_explicit, centering


def _random_psd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T


class TestCenteringMatrix:
    def test_single_point(self):
        assert_allclose(centering_matrix(1), [[0.0]])

    def test_two_points(self):
        assert_allclose(centering_matrix(2), [[0.5, -0.5], [-0.5, 0.5]])

    def test_annihilates_constant_vectors(self):
        for n in (1, 2, 5, 17):
            h = centering_matrix(n)
            assert_allclose(h @ np.ones(n), np.zeros(n), atol=1e-14)

    def test_idempotent(self):
        for n in (1, 3, 8, 25):
            h = centering_matrix(n)
            assert_allclose(h @ h, h, atol=1e-12)

    def test_symmetric(self):
        h = centering_matrix(9)
        assert np.array_equal(h, h.T)

    def test_rejects_nonpositive_size(self):
        with pytest.raises(DimensionError):
            centering_matrix(0)


class TestCenterGram:
    def test_all_ones_centers_to_zero(self):
        assert_allclose(center_gram(np.ones((3, 3))), np.zeros((3, 3)), atol=1e-15)

    def test_identity_two_by_two(self):
        assert_allclose(center_gram(np.eye(2)), [[0.5, -0.5], [-0.5, 0.5]])

    def test_matches_explicit_double_product(self):
        """Centered Gram equals H K H computed with dense centering matrices."""
        rng = np.random.default_rng(42)
        for n in (2, 5, 11):
            k = _random_psd(rng, n)
            got = center_gram(k)
            want = center_gram_explicit(k)
            assert_allclose(got, want, atol=1e-12 * np.linalg.norm(k))

    def test_row_and_column_sums_vanish(self):
        rng = np.random.default_rng(7)
        for n in (3, 6, 20):
            k = _random_psd(rng, n)
            c = center_gram(k)
            tol = 1e-10 * np.linalg.norm(k)
            assert np.abs(c.sum(axis=0)).max() <= tol
            assert np.abs(c.sum(axis=1)).max() <= tol

    def test_preserves_positive_semidefiniteness(self):
        rng = np.random.default_rng(3)
        for n in (2, 5, 12):
            k = _random_psd(rng, n)
            eigs = np.linalg.eigvalsh(center_gram(k))
            assert eigs.min() >= -1e-10 * np.linalg.norm(k)

    def test_output_exactly_symmetric(self):
        rng = np.random.default_rng(11)
        c = center_gram(_random_psd(rng, 7))
        assert np.array_equal(c, c.T)

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionError):
            center_gram(np.ones((2, 3)))


class TestSymEig:
    def test_diagonal_sorted_descending(self):
        res = sym_eig(np.diag([3.0, 1.0, 2.0]))
        assert_allclose(res.values, [3.0, 2.0, 1.0])

    def test_exchange_matrix(self):
        """[[0,1],[1,0]] has eigenvalues (1, -1) with +/- 1/sqrt(2) vectors."""
        res = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert_allclose(res.values, [1.0, -1.0], atol=1e-12)
        assert_allclose(np.abs(res.vectors), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(42)
        for n in (2, 4, 9):
            m = rng.standard_normal((n, n))
            m = (m + m.T) / 2
            res = sym_eig(m)
            v = res.vectors
            assert_allclose(v.T @ v, np.eye(n), atol=1e-10)
            back = v @ np.diag(res.values) @ v.T
            assert_allclose(back, m, atol=1e-8 * max(np.linalg.norm(m), 1.0))

    def test_gram_matrices_have_nonnegative_spectrum(self):
        rng = np.random.default_rng(5)
        for n in (3, 6):
            k = _random_psd(rng, n)
            res = sym_eig(k)
            assert res.values.min() >= -1e-10 * np.linalg.norm(k)

    def test_rejects_asymmetric_input(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            sym_eig(m)

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionError):
            sym_eig(np.zeros((2, 3)))


class TestPinv:
    def test_diagonal_with_zero(self):
        assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-14)

    def test_identity(self):
        assert_allclose(pinv(np.eye(4)), np.eye(4), atol=1e-14)

    def test_penrose_identities(self):
        """All four Moore-Penrose conditions on a random rectangular matrix."""
        rng = np.random.default_rng(42)
        m = rng.standard_normal((5, 3))
        p = pinv(m)
        scale = np.linalg.norm(m)
        assert_allclose(m @ p @ m, m, atol=1e-8 * scale)
        assert_allclose(p @ m @ p, p, atol=1e-8 / scale)
        assert_allclose((m @ p).T, m @ p, atol=1e-10)
        assert_allclose((p @ m).T, p @ m, atol=1e-10)

    def test_involution_on_full_rank(self):
        rng = np.random.default_rng(8)
        m = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        assert_allclose(pinv(pinv(m)), m, atol=1e-8 * np.linalg.norm(m))

    def test_small_singular_values_truncated(self):
        # 1e-14 sits below the default relative cutoff, so it must map to 0.
        p = pinv(np.diag([1.0, 1e-14]))
        assert_allclose(p, np.diag([1.0, 0.0]), atol=1e-12)

    def test_rejects_nonpositive_rtol(self):
        with pytest.raises(ValueError):
            pinv(np.eye(2), rtol=0.0)


class TestNumericalRank:
    def test_counts_above_relative_cutoff(self):
        assert numerical_rank(np.array([3.0, 2.0, 1e-15])) == 2

    def test_zero_spectrum(self):
        assert numerical_rank(np.array([0.0, 0.0])) == 0

    def test_negative_noise_ignored(self):
        assert numerical_rank(np.array([1.0, 1e-16, -1e-16])) == 1

    def test_empty(self):
        assert numerical_rank(np.array([])) == 0

    def test_centered_group_indicator_gram(self):
        """Group-indicator Gram over 3 groups loses exactly one rank to centering."""
        codes = np.array([0, 0, 1, 1, 2, 2])
        k = (codes[:, None] == codes[None, :]).astype(float)
        res = sym_eig(center_gram(k))
        assert numerical_rank(res.values) == 2

    def test_rejects_bad_rtol(self):
        with pytest.raises(ValueError):
            numerical_rank(np.array([1.0]), rtol=-1.0)


class TestCenteringConsistency:
    def test_center_gram_of_centered_input_is_fixed_point(self):
        rng = np.random.default_rng(2)
        k = _random_psd(rng, 6)
        once = center_gram(k)
        twice = center_gram(once)
        assert_allclose(twice, once, atol=1e-12 * np.linalg.norm(k))

    def test_explicit_oracle_agrees_on_asymmetric_seed(self):
        # centering as H K H is defined for any square K, not only PSD ones
        rng = np.random.default_rng(13)
        k = rng.standard_normal((5, 5))
        sym = (k + k.T) / 2
        assert_allclose(center_gram(sym), centering(5) @ sym @ centering(5), atol=1e-12)
