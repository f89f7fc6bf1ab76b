"""
Tests for the TV minimization dispatcher, signed recovery, the kc=1 closed
form and the grid LP oracle
"""
import numpy as np
import pytest

from superres.core.bpc import (
    GridLpConfig,
    _slide,
    SolutionKind,
    grid_lp_min_tv,
    min_tv_lower_bound,
    recover_signed,
    solve_bpc,
    toy_extreme_point,
    toy_solve,
    uniqueness_precheck,
)
from superres.core.certificates import cosine, verify_certificate
from superres.core.generators import alternating_comb, random_nonnegative, separated_locations
from superres.core.measures import ObservationVector, SparseMeasure, forward_measure, match_atoms, tv_norm
from superres.core.toeplitz import Regime, build_toeplitz, classify_regime
from superres.utils.exceptions import InvalidInput, RecoveryFailure


def assert_consistent(w, y, atol=1e-8):
    np.testing.assert_allclose(forward_measure(w, y.kc).coeffs, y.coeffs, atol=atol)


def alternating_lattice(rng, kc):
    """Atoms of sign (-1)^j on a random subset of x0 + πj/k0, both signs present.

    |ŵ[k0]| equals the total variation, so the measure is its own minimizer and
    min TV exceeds y0 by twice the negative mass.
    """
    k0 = int(rng.integers(1, kc + 1))
    j = np.arange(2 * k0)
    keep = rng.random(2 * k0) < 0.6
    keep[rng.choice(j[::2])] = keep[rng.choice(j[1::2])] = True
    x = rng.uniform(0.0, 2 * np.pi) + np.pi * j[keep] / k0
    return SparseMeasure.from_arrays(np.mod(x, 2 * np.pi), (-1.0) ** j[keep] * rng.uniform(0.2, 1.0, keep.sum()))


class TestBounds:
    """max_k |y_k| and the sufficient uniqueness condition."""

    @pytest.mark.parametrize("coeffs,expected", [([0, 0, 4], 4.0), ([1, 1, 1], 1.0), ([2, 1], 2.0)])
    def test_lower_bound(self, coeffs, expected):
        assert min_tv_lower_bound(ObservationVector(coeffs)) == expected

    @pytest.mark.parametrize("coeffs,expected", [([0, 0, 4], True), ([1, 1, 1], False), ([2, 1], False)])
    def test_precheck(self, coeffs, expected):
        assert uniqueness_precheck(ObservationVector(coeffs)) is expected

    @pytest.mark.property
    def test_precheck_implies_indefinite(self, rng):
        for _ in range(500):
            kc = int(rng.integers(1, 6))
            y0 = rng.normal()
            tail = rng.normal(size=kc) + 1j * rng.normal(size=kc)
            y = ObservationVector(np.concatenate([[y0], tail]))
            if uniqueness_precheck(y):
                assert classify_regime(build_toeplitz(y)).regime == Regime.INDEFINITE


class TestSolveBpc:
    """Regime dispatch."""

    def test_alternating_comb_unique_signed(self, y_alternating_comb):
        report = solve_bpc(y_alternating_comb)
        assert report.kind == SolutionKind.UNIQUE_SIGNED
        assert report.min_tv == pytest.approx(4.0, abs=1e-6)
        loc_err, wt_err = match_atoms(report.solution, alternating_comb(2))
        assert loc_err < 1e-6 and wt_err < 1e-6
        np.testing.assert_allclose(report.certificate.coeffs, cosine(2).coeffs, atol=1e-6)
        assert report.certificate_check.certifies_uniqueness

    def test_ones_unique_nonnegative(self, y_ones):
        report = solve_bpc(y_ones)
        assert report.kind == SolutionKind.UNIQUE_NONNEGATIVE
        assert report.min_tv == pytest.approx(1.0)
        loc_err, wt_err = match_atoms(report.solution, SparseMeasure(((0.0, 1.0),)))
        assert loc_err < 1e-8 and wt_err < 1e-8

    def test_identity_infinitely_many(self, y_identity):
        report = solve_bpc(y_identity)
        assert report.kind == SolutionKind.INFINITELY_MANY_POSITIVE
        assert not report.kind.is_unique
        assert report.solution is None
        assert report.min_tv == pytest.approx(1.0)
        assert len(report.sample_solutions) == 2
        for w in report.sample_solutions:
            assert len(w) == 3
            assert_consistent(w, y_identity)
            assert tv_norm(w) == pytest.approx(1.0)

    def test_zero(self):
        report = solve_bpc(ObservationVector([0.0, 0.0, 0.0]))
        assert report.kind == SolutionKind.ZERO_MEASURE
        assert report.min_tv == 0.0
        assert len(report.solution) == 0

    def test_negative_data_mirrors(self, y_ones):
        report = solve_bpc(-y_ones)
        assert report.kind == SolutionKind.UNIQUE_NONPOSITIVE
        assert report.regime.regime == Regime.NSD_RANK_DEFICIENT
        assert report.solution.weights[0] == pytest.approx(-1.0)
        assert report.certificate.eval(0.3) == pytest.approx(-1.0)

    def test_sign_symmetry_signed(self, y_alternating_comb):
        report = solve_bpc(y_alternating_comb)
        mirrored = solve_bpc(-y_alternating_comb)
        assert mirrored.kind == SolutionKind.UNIQUE_SIGNED
        loc_err, wt_err = match_atoms(mirrored.solution, report.solution.negated())
        assert loc_err < 1e-6 and wt_err < 1e-6

    def test_certify_attaches_checks(self, two_atom_positive):
        y = forward_measure(two_atom_positive, 3)
        report = solve_bpc(y, certify=True)
        assert report.certificate_check.passed
        assert not report.certificate_check.certifies_uniqueness
        assert solve_bpc(y).certificate_check is None

    def test_oracle_gap(self):
        report = solve_bpc(ObservationVector([2.0, 1.0]), oracle=True, lp_config=GridLpConfig(n_grid=256))
        assert report.kind == SolutionKind.INFINITELY_MANY_POSITIVE
        assert report.min_tv == pytest.approx(2.0)
        assert abs(report.oracle_gap) <= 1e-4

    def test_min_tv_attains_lower_bound_when_y0_small(self, y_alternating_comb):
        assert solve_bpc(y_alternating_comb).min_tv == pytest.approx(min_tv_lower_bound(y_alternating_comb), abs=1e-6)


class TestRecoverSigned:
    """Certified recovery in the indefinite regime."""

    def test_alternating_comb_fixture(self, y_alternating_comb):
        solution, eta = recover_signed(y_alternating_comb)
        loc_err, wt_err = match_atoms(solution, alternating_comb(2))
        assert loc_err < 1e-6 and wt_err < 1e-6
        assert verify_certificate(eta, solution, y_alternating_comb).certifies_uniqueness

    def test_toy_signed(self):
        y = ObservationVector([0.5, 1.0])
        solution, _ = recover_signed(y)
        loc_err, wt_err = match_atoms(solution, SparseMeasure(((0.0, 0.75), (np.pi, -0.25))))
        assert loc_err < 1e-6 and wt_err < 1e-6

    def test_two_separated_atoms(self):
        truth = SparseMeasure(((0.7, 0.9), (3.9, -0.5)))
        y = forward_measure(truth, 4)
        assert classify_regime(build_toeplitz(y)).regime == Regime.INDEFINITE
        solution, _ = recover_signed(y)
        loc_err, wt_err = match_atoms(solution, truth)
        assert loc_err < 1e-6 and wt_err < 1e-6
        assert tv_norm(solution) == pytest.approx(1.4, abs=1e-6)

    @pytest.mark.parametrize("kc", [2, 3, pytest.param(5, marks=pytest.mark.slow)])
    def test_alternating_comb(self, kc):
        truth = alternating_comb(kc)
        solution, eta = recover_signed(forward_measure(truth, kc))
        loc_err, wt_err = match_atoms(solution, truth)
        assert loc_err < 1e-6 and wt_err < 1e-6
        np.testing.assert_allclose(eta.coeffs, cosine(kc).coeffs, atol=1e-6)

    @pytest.mark.property
    def test_random_off_grid_pairs(self, rng):
        for _ in range(6):
            kc = int(rng.integers(6, 9))
            x = separated_locations(rng, 2, 0.8 * np.pi)
            a = rng.uniform(0.3, 1.0, 2) * np.array([1.0, -1.0])
            truth = SparseMeasure.from_arrays(x, a)
            y = forward_measure(truth, kc)
            assert classify_regime(build_toeplitz(y)).regime == Regime.INDEFINITE
            solution, eta = recover_signed(y)
            loc_err, wt_err = match_atoms(solution, truth)
            assert loc_err < 1e-6 and wt_err < 1e-6
            assert tv_norm(solution) == pytest.approx(tv_norm(truth), abs=1e-6)
            assert verify_certificate(eta, solution, y).certifies_uniqueness

    def test_rejects_semidefinite_data(self, y_ones):
        with pytest.raises(RecoveryFailure) as exc:
            recover_signed(y_ones)
        assert exc.value.stage == "classify"

    def test_solution_is_consistent(self):
        truth = SparseMeasure(((0.5, 1.0), (2.6, -0.8), (4.4, 0.6)))
        y = forward_measure(truth, 8)
        solution, _ = recover_signed(y)
        assert_consistent(solution, y, atol=1e-7)
        assert solution.has_mixed_signs()
        assert len(solution) <= 16


class TestSlide:
    """Continuous sliding of provisional atoms onto the observations."""

    def test_few_atoms_reach_feasibility(self):
        truth = SparseMeasure(((0.7, 0.9), (3.9, -0.5)))
        y = forward_measure(truth, 4)
        start = SparseMeasure(((0.68, 0.85), (3.93, -0.45)))
        slid = _slide(start, y, 500)
        loc_err, wt_err = match_atoms(slid, truth)
        assert loc_err < 1e-8 and wt_err < 1e-8

    def test_many_atoms_keep_signs(self, y_alternating_comb):
        start = SparseMeasure.from_arrays(np.pi * np.arange(4) / 2 + 0.02, 0.9 * (-1.0) ** np.arange(4))
        slid = _slide(start, y_alternating_comb, 500)
        assert_consistent(slid, y_alternating_comb, atol=1e-6)
        np.testing.assert_array_equal(np.sign(slid.weights), np.sign(start.weights))

    def test_unreachable_data_fails_refine(self):
        y = forward_measure(SparseMeasure(((1.0, -1.0),)), 2)
        with pytest.raises(RecoveryFailure) as exc:
            _slide(SparseMeasure(((1.0, 1.0),)), y, 500)
        assert exc.value.stage == "refine"


class TestToyProblem:
    """Closed-form kc=1 solution set."""

    def test_single_atom(self):
        report = toy_solve(1.0, 1.0)
        assert report.kind == SolutionKind.UNIQUE_NONNEGATIVE
        assert report.solution == SparseMeasure(((0.0, 1.0),))

    def test_signed(self):
        report = toy_solve(0.5, 1.0)
        assert report.kind == SolutionKind.UNIQUE_SIGNED
        loc_err, wt_err = match_atoms(report.solution, SparseMeasure(((0.0, 0.75), (np.pi, -0.25))))
        assert loc_err < 1e-12 and wt_err < 1e-12
        assert report.min_tv == pytest.approx(1.0)

    def test_infinitely_many(self):
        report = toy_solve(2.0, 1.0)
        assert report.kind == SolutionKind.INFINITELY_MANY_POSITIVE
        assert report.sample_solutions[0] == SparseMeasure(((0.0, 1.5), (np.pi, 0.5)))
        y = ObservationVector([2.0, 1.0])
        for w in report.sample_solutions:
            assert_consistent(w, y, atol=1e-12)
            assert tv_norm(w) == pytest.approx(2.0)

    def test_agrees_with_solver(self):
        for y0, y1 in [(1.0, 1.0), (0.5, 1.0), (2.0, 1.0), (0.3, 0.8j), (1.7, 0.4 - 0.9j)]:
            assert toy_solve(y0, y1).kind == solve_bpc(ObservationVector([y0, y1])).kind

    @pytest.mark.parametrize("y0", [1.0 + 5e-11, 1.0 - 5e-11, 1.0 + 1e-13])
    def test_boundary_follows_regime_tolerance(self, y0):
        report = toy_solve(y0, 1.0)
        assert report.regime.regime == Regime.PSD_RANK_DEFICIENT
        assert report.kind == SolutionKind.UNIQUE_NONNEGATIVE
        assert report.kind == solve_bpc(ObservationVector([y0, 1.0])).kind
        assert report.min_tv == pytest.approx(1.0, abs=1e-9)

    def test_phase_rotation(self):
        y1 = 0.9 * np.exp(0.8j)
        report = toy_solve(0.4, y1)
        assert_consistent(report.solution, ObservationVector([0.4, y1]), atol=1e-12)

    def test_rejects_invalid(self):
        with pytest.raises(InvalidInput):
            toy_solve(-1.0, 0.5)
        with pytest.raises(InvalidInput):
            toy_solve(0.0, 0.0)

    @pytest.mark.parametrize("a_small", [0.5, 0.7, 1.0])
    @pytest.mark.parametrize("branch", [1, -1])
    def test_extreme_points(self, a_small, branch):
        y1 = 1.0 * np.exp(0.3j)
        w = toy_extreme_point(2.0, y1, a_small, branch)
        assert len(w) <= 2
        assert w.is_nonnegative()
        assert_consistent(w, ObservationVector([2.0, y1]), atol=1e-12)

    def test_extreme_point_range(self):
        with pytest.raises(InvalidInput):
            toy_extreme_point(2.0, 1.0, 0.1)
        with pytest.raises(InvalidInput):
            toy_extreme_point(1.0, 1.0, 0.5)


class TestGridLp:
    """Grid-discretized oracle."""

    def test_ones(self, y_ones):
        assert grid_lp_min_tv(y_ones) == pytest.approx(1.0, abs=1e-6)

    def test_alternating_comb(self, y_alternating_comb):
        assert grid_lp_min_tv(y_alternating_comb) == pytest.approx(4.0, abs=1e-4)

    def test_identity(self, y_identity):
        assert grid_lp_min_tv(y_identity) == pytest.approx(1.0, abs=1e-4)

    def test_grid_too_coarse(self, y_ones):
        with pytest.raises(InvalidInput):
            grid_lp_min_tv(y_ones, GridLpConfig(n_grid=8))

    @pytest.mark.property
    def test_oracle_consistency(self, rng):
        cfg = GridLpConfig(n_grid=512)
        for trial in range(100):
            kc = int(rng.integers(1, 4))
            if trial % 2:
                w = random_nonnegative(rng, int(rng.integers(1, 4)), kc, separation=0.3)
            else:
                w = alternating_lattice(rng, kc)
            y = forward_measure(w, kc)
            value = grid_lp_min_tv(y, cfg)
            tol = max(1e-3, 10 * abs(y.y0) / cfg.n_grid)
            assert value >= min_tv_lower_bound(y) - 1e-4
            psd = classify_regime(build_toeplitz(y)).regime.is_positive_semidefinite
            assert psd == bool(trial % 2)
            if psd:
                assert value == pytest.approx(y.y0, abs=tol)
            else:
                assert value > y.y0 + tol
