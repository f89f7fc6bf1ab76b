"""
Tests for Toeplitz construction, regime classification and CFP decompositions
"""
import numpy as np
import pytest

from superres.core.generators import random_nonnegative, random_signed
from superres.core.measures import ObservationVector, SparseMeasure, forward_measure, match_atoms, tv_norm
from superres.core.toeplitz import (
    Regime,
    build_toeplitz,
    cfp_decompose_deficient,
    cfp_decompose_full,
    classify_regime,
    decomposition_to_measure,
    eig_hermitian,
    is_positive_sequence,
    pseudospectrum,
    vandermonde,
)
from superres.utils.exceptions import DecompositionFailure


class TestBuildToeplitz:
    """T_y[m][n] = y_{n-m}."""

    @pytest.mark.property
    def test_vandermonde_factorization_of_any_measure(self, rng):
        for trial in range(200):
            kc = int(rng.integers(1, 9))
            count = int(rng.integers(1, 2 * kc + 2))
            if trial % 2:
                w = random_signed(rng, max(count, 2), kc, separation=0.05)
            else:
                w = random_nonnegative(rng, count, kc, separation=0.05)
            V = vandermonde(w.locations, kc)
            factored = (V * w.weights) @ V.conj().T
            assert np.linalg.norm(build_toeplitz(forward_measure(w, kc)).dense - factored, "fro") <= 1e-9

    @pytest.mark.property
    def test_decomposition_reproduces_matrix(self, rng):
        for _ in range(100):
            kc = int(rng.integers(1, 7))
            count = int(rng.integers(1, kc + 2))
            w = random_nonnegative(rng, count, kc, separation=np.pi / (kc + 1))
            T = build_toeplitz(forward_measure(w, kc))
            dec = cfp_decompose_deficient(T) if count <= kc else cfp_decompose_full(T, anchor=0.0)
            assert dec.residual(T) <= 1e-9 * max(1.0, T.frobenius())

    def test_all_ones(self, y_ones):
        np.testing.assert_array_equal(build_toeplitz(y_ones).dense, np.ones((3, 3)))

    def test_identity(self, y_identity):
        np.testing.assert_array_equal(build_toeplitz(y_identity).dense, np.eye(3))

    def test_alternating_comb(self, y_alternating_comb):
        expected = np.array([[0, 0, 4], [0, 0, 0], [4, 0, 0]], dtype=complex)
        np.testing.assert_allclose(build_toeplitz(y_alternating_comb).dense, expected, atol=1e-12)

    def test_hermitian(self, rng):
        y = ObservationVector(np.concatenate([[1.5], rng.normal(size=4) + 1j * rng.normal(size=4)]))
        T = build_toeplitz(y).dense
        np.testing.assert_array_equal(T, T.conj().T)
        assert T[0, 2] == y.coeffs[2]
        assert T[2, 0] == np.conj(y.coeffs[2])


class TestEigHermitian:
    """Spectra of the worked examples."""

    @pytest.mark.parametrize("coeffs,expected", [
        ([1, 1, 1], [0, 0, 3]),
        ([1, 0, 0], [1, 1, 1]),
        ([0, 0, 4], [-4, 0, 4]),
    ])
    def test_eigenvalues(self, coeffs, expected):
        spectrum = eig_hermitian(build_toeplitz(ObservationVector(coeffs)))
        np.testing.assert_allclose(spectrum.eigenvalues, expected, atol=1e-12)

    def test_eigenvectors_orthonormal(self, rng):
        y = forward_measure(random_signed(rng, 4, 6), 6)
        Q = eig_hermitian(build_toeplitz(y)).eigenvectors
        np.testing.assert_allclose(Q.conj().T @ Q, np.eye(7), atol=1e-10)

    def test_relative_tolerance(self, y_ones):
        spectrum = eig_hermitian(build_toeplitz(y_ones))
        assert spectrum.tol_eig == pytest.approx(3e-9)
        assert spectrum.rank == 1


class TestClassifyRegime:
    """Regimes from the signs of the extreme eigenvalues."""

    def test_ones_rank_deficient(self, y_ones):
        report = classify_regime(build_toeplitz(y_ones))
        assert report.regime == Regime.PSD_RANK_DEFICIENT
        assert report.rank == 1

    def test_identity_definite(self, y_identity):
        assert classify_regime(build_toeplitz(y_identity)).regime == Regime.POSITIVE_DEFINITE

    def test_alternating_comb_indefinite(self, y_alternating_comb):
        assert classify_regime(build_toeplitz(y_alternating_comb)).regime == Regime.INDEFINITE

    def test_zero(self):
        report = classify_regime(build_toeplitz(ObservationVector([0.0, 0.0])))
        assert report.regime == Regime.ZERO
        assert report.rank == 0

    def test_kc_zero(self):
        assert classify_regime(build_toeplitz(ObservationVector([2.0]))).regime == Regime.POSITIVE_DEFINITE
        assert classify_regime(build_toeplitz(ObservationVector([-2.0]))).regime == Regime.NEGATIVE_DEFINITE

    def test_sign_mirror(self, rng):
        for _ in range(40):
            y = forward_measure(random_signed(rng, int(rng.integers(1, 5)), 4), 4)
            assert classify_regime(build_toeplitz(-y)).regime == classify_regime(build_toeplitz(y)).regime.mirror

    def test_scale_invariance(self, rng):
        for _ in range(40):
            y = forward_measure(random_nonnegative(rng, int(rng.integers(1, 4)), 4), 4)
            base = classify_regime(build_toeplitz(y))
            for c in (1e-3, 7.0, 1e4):
                scaled = classify_regime(build_toeplitz(y.scaled(c)))
                assert scaled.regime == base.regime
                assert scaled.rank == base.rank

    def test_few_positive_atoms_are_deficient(self, rng):
        for _ in range(40):
            w = random_nonnegative(rng, 3, 5)
            report = classify_regime(build_toeplitz(forward_measure(w, 5)))
            assert report.regime == Regime.PSD_RANK_DEFICIENT
            assert report.rank == 3


@pytest.mark.property
class TestHerglotz:
    """Positive sequences are exactly the data of nonnegative measures."""

    def test_nonnegative_measures_give_positive_sequences(self, rng):
        for _ in range(200):
            w = random_nonnegative(rng, int(rng.integers(1, 8)), 5, separation=0.1)
            assert is_positive_sequence(forward_measure(w, 5))

    def test_alternating_comb_not_positive(self, y_alternating_comb):
        assert not is_positive_sequence(y_alternating_comb)


class TestCfpDeficient:
    """Unique decomposition of rank-deficient semi-definite matrices."""

    def test_ones(self, y_ones):
        dec = cfp_decompose_deficient(build_toeplitz(y_ones))
        np.testing.assert_allclose(dec.locations, [0.0], atol=1e-8)
        np.testing.assert_allclose(dec.amplitudes, [1.0], atol=1e-8)
        assert dec.sign == 1

    def test_two_atoms(self, two_atom_positive):
        dec = cfp_decompose_deficient(build_toeplitz(forward_measure(two_atom_positive, 3)))
        np.testing.assert_allclose(dec.locations, [1.0, 4.0], atol=1e-8)
        np.testing.assert_allclose(dec.amplitudes, [0.6, 0.4], atol=1e-8)

    def test_nsd_mirror(self, two_atom_positive):
        dec = cfp_decompose_deficient(build_toeplitz(forward_measure(two_atom_positive.negated(), 3)))
        assert dec.sign == -1
        np.testing.assert_allclose(dec.locations, [1.0, 4.0], atol=1e-8)
        np.testing.assert_allclose(dec.amplitudes, [0.6, 0.4], atol=1e-8)
        loc_err, wt_err = match_atoms(decomposition_to_measure(dec), two_atom_positive.negated())
        assert loc_err < 1e-8 and wt_err < 1e-8

    def test_independent_of_null_vector(self, two_atom_positive):
        T = build_toeplitz(forward_measure(two_atom_positive, 4))
        spectrum = eig_hermitian(T)
        null_basis = spectrum.eigenvectors[:, :3]
        mixed = null_basis @ np.array([0.3, -0.5 + 0.2j, 0.8])
        a = cfp_decompose_deficient(T, spectrum=spectrum)
        b = cfp_decompose_deficient(T, spectrum=spectrum, null_vector=mixed / np.linalg.norm(mixed))
        np.testing.assert_allclose(a.locations, b.locations, atol=1e-8)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-8)

    def test_round_trip(self, rng):
        for _ in range(30):
            w = random_nonnegative(rng, 3, 6)
            dec = cfp_decompose_deficient(build_toeplitz(forward_measure(w, 6)))
            loc_err, wt_err = match_atoms(dec.to_measure(), w)
            assert loc_err < 1e-6 and wt_err < 1e-6

    def test_indefinite_rejected(self, y_alternating_comb):
        with pytest.raises(DecompositionFailure):
            cfp_decompose_deficient(build_toeplitz(y_alternating_comb))

    def test_pseudospectrum_peaks_on_atoms(self, two_atom_positive):
        spectrum = eig_hermitian(build_toeplitz(forward_measure(two_atom_positive, 5)))
        background = pseudospectrum(spectrum, np.linspace(0, 2 * np.pi, 257), rank=2)
        peaks = pseudospectrum(spectrum, np.array([1.0, 4.0]), rank=2)
        assert np.all(peaks > 1e6 * np.median(background))


class TestCfpFull:
    """Anchored decompositions of definite matrices."""

    def test_identity_anchor_zero(self, y_identity):
        dec = cfp_decompose_full(build_toeplitz(y_identity), 0.0)
        np.testing.assert_allclose(dec.locations, [0.0, 2 * np.pi / 3, 4 * np.pi / 3], atol=1e-8)
        np.testing.assert_allclose(dec.amplitudes, [1 / 3] * 3, atol=1e-8)

    def test_identity_other_anchor(self, y_identity):
        w0 = cfp_decompose_full(build_toeplitz(y_identity), 0.0).to_measure()
        w1 = cfp_decompose_full(build_toeplitz(y_identity), np.pi / 2).to_measure()
        assert len(w1) == 3
        assert np.min(np.abs(w1.locations - np.pi / 2)) < 1e-10
        np.testing.assert_allclose(forward_measure(w1, 2).coeffs, [1, 0, 0], atol=1e-8)
        assert w0 != w1
        assert tv_norm(w0) == pytest.approx(1.0)
        assert tv_norm(w1) == pytest.approx(1.0)

    def test_negative_definite(self, y_identity):
        dec = cfp_decompose_full(build_toeplitz(-y_identity), 0.0)
        assert dec.sign == -1
        assert np.all(dec.to_measure().weights < 0)

    def test_random_definite(self, rng):
        for _ in range(20):
            w = random_nonnegative(rng, 6, 3, separation=0.5)
            y = forward_measure(w, 3)
            anchor = rng.uniform(0, 2 * np.pi)
            dec = cfp_decompose_full(build_toeplitz(y), anchor)
            assert len(dec) == 4
            np.testing.assert_allclose(forward_measure(dec.to_measure(), 3).coeffs, y.coeffs, atol=1e-7)

    def test_rank_deficient_rejected(self, y_ones):
        with pytest.raises(DecompositionFailure):
            cfp_decompose_full(build_toeplitz(y_ones), 0.0)


def test_zero_measure_decomposes_to_empty():
    dec = cfp_decompose_deficient(build_toeplitz(ObservationVector([0.0, 0.0, 0.0])))
    assert len(dec) == 0
    assert dec.to_measure() == SparseMeasure()
