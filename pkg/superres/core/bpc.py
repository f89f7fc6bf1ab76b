"""
Basis pursuit in the continuum: classify the observations, then dispatch to
CFP recovery (semi-definite regimes), certified signed recovery (indefinite
regime) or samples of the solution family (definite regimes)
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import structlog
from scipy.optimize import least_squares, minimize

from superres.config import settings
from superres.core.basis_pursuit import (
    basis_pursuit_admm,
    candidate_grid,
    fourier_dictionary,
    solve_grid_lp,
    stack_observation,
)
from superres.core.certificates import (
    CertificateCheck,
    TrigPoly,
    constant,
    construct_certificate,
    derivative,
    verify_certificate,
)
from superres.core.measures import (
    TWO_PI,
    ObservationVector,
    SparseMeasure,
    circular_distance,
    forward_measure,
    tv_norm,
    wrap,
)
from superres.core.toeplitz import (
    Regime,
    RegimeReport,
    build_toeplitz,
    cfp_decompose_deficient,
    cfp_decompose_full,
    classify_regime,
    eig_hermitian,
    vandermonde_amplitudes,
)
from superres.utils.exceptions import ConvergenceFailure, InvalidInput, RecoveryFailure, SingularSystem
from superres.utils.validation import validate_positive_int

logger = structlog.get_logger(__name__)


class SolutionKind(str, Enum):
    UNIQUE_SIGNED = "UniqueSigned"
    UNIQUE_NONNEGATIVE = "UniqueNonnegative"
    UNIQUE_NONPOSITIVE = "UniqueNonpositive"
    INFINITELY_MANY_POSITIVE = "InfinitelyManyPositive"
    INFINITELY_MANY_NEGATIVE = "InfinitelyManyNegative"
    ZERO_MEASURE = "ZeroMeasure"

    @property
    def is_unique(self) -> bool:
        return self not in (SolutionKind.INFINITELY_MANY_POSITIVE, SolutionKind.INFINITELY_MANY_NEGATIVE)

    @property
    def mirror(self) -> "SolutionKind":
        return _KIND_MIRROR[self]


_KIND_MIRROR = {
    SolutionKind.UNIQUE_SIGNED: SolutionKind.UNIQUE_SIGNED,
    SolutionKind.UNIQUE_NONNEGATIVE: SolutionKind.UNIQUE_NONPOSITIVE,
    SolutionKind.UNIQUE_NONPOSITIVE: SolutionKind.UNIQUE_NONNEGATIVE,
    SolutionKind.INFINITELY_MANY_POSITIVE: SolutionKind.INFINITELY_MANY_NEGATIVE,
    SolutionKind.INFINITELY_MANY_NEGATIVE: SolutionKind.INFINITELY_MANY_POSITIVE,
    SolutionKind.ZERO_MEASURE: SolutionKind.ZERO_MEASURE,
}


@dataclass(frozen=True)
class SolutionReport:
    regime: RegimeReport
    kind: SolutionKind
    min_tv: float
    solution: Optional[SparseMeasure] = None
    sample_solutions: List[SparseMeasure] = field(default_factory=list)
    certificate: Optional[TrigPoly] = None
    certificate_check: Optional[CertificateCheck] = None
    oracle_min_tv: Optional[float] = None

    @property
    def oracle_gap(self) -> Optional[float]:
        if self.oracle_min_tv is None:
            return None
        return self.oracle_min_tv - self.min_tv

    def mirrored(self) -> "SolutionReport":
        """Report for -y given the report for y"""
        regime = RegimeReport(
            self.regime.regime.mirror,
            self.regime.rank,
            -self.regime.max_eig,
            -self.regime.min_eig,
            self.regime.tol_eig,
        )
        return replace(
            self,
            regime=regime,
            kind=self.kind.mirror,
            solution=None if self.solution is None else self.solution.negated(),
            sample_solutions=[w.negated() for w in self.sample_solutions],
            certificate=None if self.certificate is None else TrigPoly(-self.certificate.coeffs),
        )


@dataclass(frozen=True)
class GridLpConfig:
    n_grid: int
    tol: float = settings.LP_TOL
    max_iter: int = settings.LP_MAX_ITER

    @classmethod
    def for_kc(cls, kc: int) -> "GridLpConfig":
        return cls(n_grid=settings.GRID_FACTOR * (kc + 1))

    def validate(self, kc: int) -> None:
        validate_positive_int(self.n_grid, "n_grid")
        if self.n_grid < 4 * (kc + 1):
            raise InvalidInput(f"n_grid={self.n_grid} must be >= 4*(kc+1)={4 * (kc + 1)}", "n_grid")


def min_tv_lower_bound(y: ObservationVector) -> float:
    """max_k |y_k|, a lower bound on the minimal total variation"""
    return y.max_abs()


def uniqueness_precheck(y: ObservationVector) -> bool:
    """Sufficient condition for uniqueness: |y_0| < max_{k>=1} |y_k|"""
    if y.kc == 0:
        return False
    return bool(abs(y.y0) < float(np.max(np.abs(y.coeffs[1:]))) - 1e-12)


def grid_lp_min_tv(y: ObservationVector, cfg: Optional[GridLpConfig] = None) -> float:
    """Optimal value of the grid-discretized problem; an upper bound on the
    continuous minimum that tightens as n_grid grows"""
    cfg = cfg or GridLpConfig.for_kc(y.kc)
    cfg.validate(y.kc)
    return solve_grid_lp(y, cfg.n_grid, cfg.tol, cfg.max_iter).value


def solve_bpc(
    y: ObservationVector,
    certify: bool = False,
    oracle: bool = False,
    lp_config: Optional[GridLpConfig] = None,
) -> SolutionReport:
    if y.y0 < 0:
        report = solve_bpc(-y, certify=certify, oracle=oracle, lp_config=lp_config)
        return report.mirrored()

    kc = y.kc
    T = build_toeplitz(y)
    spectrum = None
    if y.max_abs() > settings.ZERO_ABS_TOL:
        spectrum = eig_hermitian(T)
    regime = classify_regime(T, spectrum=spectrum)
    log = logger.bind(kc=kc, regime=regime.regime.value, rank=regime.rank)

    if regime.regime == Regime.ZERO:
        report = SolutionReport(regime, SolutionKind.ZERO_MEASURE, 0.0, solution=SparseMeasure())

    elif regime.regime in (Regime.PSD_RANK_DEFICIENT, Regime.NSD_RANK_DEFICIENT):
        dec = cfp_decompose_deficient(T, spectrum)
        solution = dec.to_measure()
        kind = SolutionKind.UNIQUE_NONNEGATIVE if dec.sign > 0 else SolutionKind.UNIQUE_NONPOSITIVE
        certificate = constant(kc, float(dec.sign))
        check = verify_certificate(certificate, solution, y) if certify else None
        report = SolutionReport(regime, kind, abs(y.y0), solution, [], certificate, check)

    elif regime.regime in (Regime.POSITIVE_DEFINITE, Regime.NEGATIVE_DEFINITE):
        anchors = (0.0, np.pi / (kc + 1))
        samples = [cfp_decompose_full(T, anchor, spectrum).to_measure() for anchor in anchors]
        positive = regime.regime == Regime.POSITIVE_DEFINITE
        kind = SolutionKind.INFINITELY_MANY_POSITIVE if positive else SolutionKind.INFINITELY_MANY_NEGATIVE
        certificate = constant(kc, 1.0 if positive else -1.0)
        check = verify_certificate(certificate, samples[0], y) if certify else None
        report = SolutionReport(regime, kind, abs(y.y0), None, samples, certificate, check)

    else:
        solution, certificate = recover_signed(y, regime=regime)
        check = verify_certificate(certificate, solution, y)
        report = SolutionReport(
            regime, SolutionKind.UNIQUE_SIGNED, tv_norm(solution), solution, [], certificate, check
        )

    if oracle:
        report = replace(report, oracle_min_tv=grid_lp_min_tv(y, lp_config))
    log.info("bpc_solved", kind=report.kind.value, min_tv=report.min_tv, oracle_gap=report.oracle_gap)
    return report


def _cluster_grid_weights(grid: np.ndarray, weights: np.ndarray) -> SparseMeasure:
    """One provisional atom per run of same-sign grid weights separated by
    gaps of at most three grid cells, placed at the |weight|-weighted
    circular mean"""
    n_grid = grid.size
    peak = float(np.max(np.abs(weights))) if weights.size else 0.0
    if peak == 0.0:
        return SparseMeasure()
    support = np.nonzero(np.abs(weights) > 1e-9 * peak)[0]
    gap_limit = TWO_PI * 3 / n_grid

    groups: List[List[int]] = [[support[0]]]
    for i in support[1:]:
        prev = groups[-1][-1]
        if grid[i] - grid[prev] > gap_limit or np.sign(weights[i]) != np.sign(weights[prev]):
            groups.append([i])
        else:
            groups[-1].append(i)
    if len(groups) > 1:
        first, last = groups[0][0], groups[-1][-1]
        if grid[first] + TWO_PI - grid[last] <= gap_limit and np.sign(weights[first]) == np.sign(weights[last]):
            groups[0] = groups.pop() + groups[0]

    total = float(np.sum(np.abs(weights[support])))
    atoms = []
    for g in groups:
        mass = float(np.sum(weights[g]))
        if abs(mass) < settings.CLUSTER_MASS_FRACTION * total:
            continue
        centre = np.angle(np.sum(np.abs(weights[g]) * np.exp(1j * grid[g])))
        atoms.append((float(wrap(centre)), mass))
    return SparseMeasure(tuple(atoms))


def _observation_jacobian(x: np.ndarray, a: np.ndarray, kc: int) -> np.ndarray:
    """Jacobian of the stacked observation with respect to (locations, weights)"""
    kx = np.arange(kc + 1)[:, None] * x[None, :]
    k = np.arange(kc + 1)[:, None]
    d_loc = np.vstack([-k * np.sin(kx) * a, (-k * np.cos(kx) * a)[1:]])
    return np.hstack([d_loc, fourier_dictionary(x, kc)])


def _slide(w: SparseMeasure, y: ObservationVector, max_iter: int) -> SparseMeasure:
    """Move locations and weights continuously until ν(w) = y with every
    weight keeping its sign.

    With at most kc atoms a feasible measure is the only one on its support,
    so a bounded least-squares fit of the observation suffices. Larger
    supports minimize Σ sign_j a_j under the equality constraint instead.
    Raises RecoveryFailure("refine") when neither reaches feasibility.
    """
    K, kc = len(w), y.kc
    signs = np.sign(w.weights)
    b = stack_observation(y)
    start = np.concatenate([w.locations, w.weights])
    lower = np.concatenate([np.full(K, -np.inf), np.where(signs > 0, 0.0, -np.inf)])
    upper = np.concatenate([np.full(K, np.inf), np.where(signs > 0, np.inf, 0.0)])

    def residual(p):
        return fourier_dictionary(p[:K], kc) @ p[K:] - b

    def residual_jac(p):
        return _observation_jacobian(p[:K], p[K:], kc)

    if K <= kc:
        res = least_squares(
            residual,
            start,
            jac=residual_jac,
            bounds=(lower, upper),
            method="trf",
            xtol=1e-14,
            ftol=1e-14,
            gtol=1e-14,
            max_nfev=max_iter,
        )
        iterations = res.nfev
    else:
        res = minimize(
            lambda p: float(signs @ p[K:]),
            start,
            jac=lambda p: np.concatenate([np.zeros(K), signs]),
            method="SLSQP",
            bounds=[(None, None)] * K + [(0.0, None) if s > 0 else (None, 0.0) for s in signs],
            constraints=[{"type": "eq", "fun": residual, "jac": residual_jac}],
            options={"ftol": 1e-15, "maxiter": max_iter},
        )
        iterations = res.nit
    mismatch = float(np.max(np.abs(residual(res.x))))
    if mismatch > settings.RECOVERY_SLIDE_FEAS_TOL:
        raise RecoveryFailure(
            f"sliding stopped after {iterations} iterations with ‖ν(w) - y‖∞ = {mismatch:.3e}: {res.message}",
            "refine",
        )
    logger.debug("recovery_slide_done", atoms=K, iterations=iterations, mismatch=mismatch)
    return SparseMeasure.from_arrays(res.x[:K], res.x[K:])


def _newton_on_derivative(eta: TrigPoly, x: float, max_step: float) -> float:
    """Nearest root of η' from x; x is kept when Newton wanders off"""
    d1 = derivative(eta)
    d2 = derivative(d1)
    t = x
    for _ in range(50):
        curvature = d2.eval(t)
        if curvature == 0.0:
            return x
        step = d1.eval(t) / curvature
        t -= step
        if abs(step) < 1e-15:
            break
    return t if circular_distance(t, x) <= max_step else x


def _resolve_amplitudes(locations: np.ndarray, y: ObservationVector, drop_tol: float) -> SparseMeasure:
    amplitudes = vandermonde_amplitudes(locations, y.coeffs)
    keep = np.abs(amplitudes) >= drop_tol
    if not np.all(keep) and np.any(keep):
        locations = locations[keep]
        amplitudes = vandermonde_amplitudes(locations, y.coeffs)
    elif not np.any(keep):
        return SparseMeasure()
    return SparseMeasure.from_arrays(locations, amplitudes)


def recover_signed(
    y: ObservationVector,
    n_grid: Optional[int] = None,
    max_rounds: int = settings.RECOVERY_MAX_ROUNDS,
    drop_tol: float = settings.RECOVERY_DROP_TOL,
    tol_feas: float = settings.RECOVERY_FEAS_TOL,
    regime: Optional[RegimeReport] = None,
) -> Tuple[SparseMeasure, TrigPoly]:
    """Unique signed solution in the indefinite regime together with its
    verified nonconstant certificate.

    Stages: grid basis pursuit (ADMM), clustering, continuous sliding,
    certificate-guided re-anchoring, verification. Any stage that cannot
    produce a certified answer raises RecoveryFailure naming the stage.
    """
    kc = y.kc
    if regime is None:
        regime = classify_regime(build_toeplitz(y))
    if regime.regime != Regime.INDEFINITE:
        raise RecoveryFailure(f"observations are {regime.regime.value}, not Indefinite", "classify")

    scale = y.max_abs()
    yn = y.scaled(1.0 / scale)
    n_grid = n_grid or settings.RECOVERY_GRID_FACTOR * (kc + 1)
    log = logger.bind(kc=kc, n_grid=n_grid)

    # grid
    grid = candidate_grid(n_grid)
    try:
        admm = basis_pursuit_admm(fourier_dictionary(grid, kc), stack_observation(yn))
    except ConvergenceFailure as e:
        raise RecoveryFailure(f"grid basis pursuit failed: {e.message}", "grid")
    if not np.all(np.isfinite(admm.weights)) or not np.any(admm.weights):
        raise RecoveryFailure("grid basis pursuit returned no usable weights", "grid")
    log.debug("recovery_grid_done", iterations=admm.iterations, gap=admm.gap)

    # cluster
    w = _cluster_grid_weights(grid, admm.weights)
    if len(w) == 0 or len(w) > 2 * kc:
        raise RecoveryFailure(f"clustering produced {len(w)} atoms (allowed 1..{2 * kc})", "cluster")
    log.debug("recovery_clustered", atoms=len(w))

    # refine
    w = _slide(w, yn, settings.RECOVERY_SLIDE_MAX_ITER)
    w = _resolve_amplitudes(w.locations, yn, drop_tol)
    max_step = TWO_PI * 3 / n_grid
    for round_ in range(1, max_rounds + 1):
        if len(w) == 0 or len(w) > 2 * kc:
            raise RecoveryFailure(f"refinement left {len(w)} atoms", "refine")
        try:
            eta = construct_certificate(w, kc)
        except SingularSystem as e:
            raise RecoveryFailure(f"certificate construction failed: {e.message}", "refine")
        moved = np.array([_newton_on_derivative(eta, x, max_step) for x in w.locations])
        updated = _resolve_amplitudes(wrap(moved), yn, drop_tol)
        settled = len(updated) == len(w) and (
            len(w) == 0 or float(np.max(circular_distance(updated.locations, w.locations))) < 1e-12
        )
        w = updated
        if settled:
            log.debug("recovery_refined", rounds=round_, atoms=len(w))
            break

    # verify
    solution = w.scaled(scale)
    mismatch = float(np.max(np.abs(forward_measure(solution, kc).coeffs - y.coeffs)))
    if mismatch > tol_feas * max(1.0, scale):
        raise RecoveryFailure(f"infeasible solution, ‖ν(w) - y‖∞ = {mismatch:.3e}", "verify")
    if len(solution) > 2 * kc or not solution.has_mixed_signs():
        raise RecoveryFailure(f"{len(solution)} atoms without mixed signs", "verify")
    try:
        certificate = construct_certificate(solution, kc)
    except SingularSystem as e:
        raise RecoveryFailure(f"final certificate construction failed: {e.message}", "verify")
    check = verify_certificate(certificate, solution, y)
    if not check.certifies_uniqueness:
        raise RecoveryFailure(
            f"certificate rejected (excess {check.worst_excess:.3e}, "
            f"saturation gap {check.worst_saturation_gap:.3e}, nonconstant={check.nonconstant})",
            "verify",
        )
    log.info("recovery_certified", atoms=len(solution), tv=tv_norm(solution))
    return solution, certificate


def _toy_regime(y0: float, y1: complex) -> RegimeReport:
    return classify_regime(build_toeplitz(ObservationVector([y0, y1])))


def toy_extreme_point(y0: float, y1: complex, a_small: float, branch: int = 1) -> SparseMeasure:
    """Two-atom extreme-point solution for kc=1 and y0 > |y1| whose smaller
    weight is a_small in [(y0 - r)/2, y0/2]; branch picks one of the two
    mirror-image configurations"""
    r, alpha = abs(y1), float(np.angle(y1))
    if not y0 > r:
        raise InvalidInput(f"extreme points need y0 > |y1| (y0={y0}, |y1|={r})", "y0")
    lo, hi = (y0 - r) / 2.0, y0 / 2.0
    slack = 1e-12 * max(1.0, y0)
    if not lo - slack <= a_small <= hi + slack or branch not in (1, -1):
        raise InvalidInput(f"a_small must lie in [{lo}, {hi}] with branch ±1", "a_small")
    a2 = min(max(a_small, lo), hi)
    a1 = y0 - a2
    if r == 0.0:
        return SparseMeasure(((0.0 if branch > 0 else np.pi / 2, a1), (np.pi if branch > 0 else 3 * np.pi / 2, a2)))

    p = (a1 * a1 - a2 * a2 + r * r) / (2.0 * r)
    q = branch * np.sqrt(max(a1 * a1 - p * p, 0.0))
    u = complex(p, q)
    x1 = -np.angle(u) - alpha
    x2 = -np.angle(r - u) - alpha
    return SparseMeasure(((x1, a1), (x2, a2)))


def toy_solve(y0: float, y1: complex) -> SolutionReport:
    """Closed-form solution set at kc=1; the branch follows classify_regime
    so that toy_solve and solve_bpc agree at the PSD boundary"""
    if y0 < 0:
        raise InvalidInput(f"y0 must be >= 0, got {y0}", "y0")
    r, alpha = abs(y1), float(np.angle(y1))
    if y0 == 0 and r == 0:
        raise InvalidInput("(y0, y1) must not both vanish", "y")

    regime = _toy_regime(y0, y1)
    base = ((-alpha, (y0 + r) / 2.0), (-alpha + np.pi, (y0 - r) / 2.0))

    if regime.regime == Regime.ZERO:
        return SolutionReport(regime, SolutionKind.ZERO_MEASURE, 0.0, solution=SparseMeasure())
    if regime.regime == Regime.PSD_RANK_DEFICIENT:
        w = SparseMeasure(((-alpha, y0),))
        return SolutionReport(regime, SolutionKind.UNIQUE_NONNEGATIVE, y0, w, [], constant(1, 1.0))
    if regime.regime == Regime.INDEFINITE:
        w = SparseMeasure(base)
        eta = TrigPoly([0.0, 0.5 * np.exp(-1j * alpha)])
        return SolutionReport(regime, SolutionKind.UNIQUE_SIGNED, r, w, [], eta)

    a_mid = (y0 - r / 2.0) / 2.0
    samples = [SparseMeasure(base)] + [toy_extreme_point(y0, y1, a_mid, s) for s in (1, -1)]
    return SolutionReport(regime, SolutionKind.INFINITELY_MANY_POSITIVE, y0, None, samples, constant(1, 1.0))
