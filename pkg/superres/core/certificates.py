"""
Real trigonometric polynomials of degree <= Kc used as dual certificates:
construction by Hermite interpolation and verification of the optimality
conditions (‖η‖∞ <= 1, signed support inside the signed saturation set)
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import structlog
from scipy.optimize import brentq

from superres.config import settings
from superres.core.measures import TWO_PI, ObservationVector, SparseMeasure, forward_measure, wrap
from superres.utils.exceptions import InvalidInput, SingularSystem
from superres.utils.validation import validate_nonnegative_int

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class TrigPoly:
    """η(t) = c₀ + 2 Σ_{k=1}^{kc} Re(c_k e^{-ikt})"""
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise InvalidInput("a trigonometric polynomial needs c_0", "c")
        if c[0].imag != 0.0:
            raise InvalidInput(f"c_0 must be real, got imaginary part {c[0].imag}", "c")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def kc(self) -> int:
        return self.coeffs.size - 1

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        k = np.arange(1, self.kc + 1)
        tail = np.exp(-1j * np.multiply.outer(t, k)) @ self.coeffs[1:]
        out = self.coeffs[0].real + 2.0 * tail.real
        return float(out) if out.ndim == 0 else out

    def eval_derivative(self, t):
        return derivative(self).eval(t)

    def sample(self, n: int) -> np.ndarray:
        """Values on the grid 2πj/n, j = 0..n-1 (n > kc)"""
        padded = np.zeros(n, dtype=complex)
        padded[: self.kc + 1] = self.coeffs
        return 2.0 * np.fft.fft(padded).real - self.coeffs[0].real

    def __call__(self, t):
        return self.eval(t)


def constant(kc: int, value: float = 1.0) -> TrigPoly:
    """η ≡ value; the canonical certificate of the semi-definite regimes"""
    kc = validate_nonnegative_int(kc, "kc")
    c = np.zeros(kc + 1, dtype=complex)
    c[0] = value
    return TrigPoly(c)


def cosine(kc: int, order: Optional[int] = None) -> TrigPoly:
    """cos(order·t) as a degree-kc polynomial (order defaults to kc)"""
    order = kc if order is None else order
    c = np.zeros(kc + 1, dtype=complex)
    if order == 0:
        c[0] = 1.0
    else:
        c[order] = 0.5
    return TrigPoly(c)


def derivative(p: TrigPoly) -> TrigPoly:
    k = np.arange(p.kc + 1)
    c = -1j * k * p.coeffs
    c[0] = 0.0
    return TrigPoly(c)


def is_nonconstant(p: TrigPoly, tol: float = settings.NONCONSTANT_TOL) -> bool:
    if p.kc == 0:
        return False
    return bool(np.max(np.abs(p.coeffs[1:])) > tol * max(1.0, abs(p.coeffs[0].real)))


def _interpolation_system(locations: np.ndarray, kc: int) -> np.ndarray:
    """Rows of η(x_j) and η'(x_j) in the real unknowns (c₀, √2 Re c_k, √2 Im c_k),
    whose Euclidean norm is the ℓ² norm of the full symmetric coefficient vector"""
    k = np.arange(1, kc + 1)
    kx = np.outer(locations, k)
    s2 = np.sqrt(2.0)
    ones = np.ones((locations.size, 1))
    values = np.hstack([ones, s2 * np.cos(kx), s2 * np.sin(kx)])
    slopes = np.hstack([0.0 * ones, -s2 * k * np.sin(kx), s2 * k * np.cos(kx)])
    return np.vstack([values, slopes])


def construct_certificate(
    w: SparseMeasure, kc: int, rcond: float = settings.INTERP_RCOND
) -> TrigPoly:
    """Minimum-coefficient-norm η with η(x_j) = sign(a_j), η'(x_j) = 0.

    The result is only a candidate: ‖η‖∞ <= 1 is not guaranteed and must be
    checked with verify_certificate. When the atoms are provisional the
    system can be inconsistent; the least-squares solution is returned.
    """
    kc = validate_nonnegative_int(kc, "kc")
    K = len(w)
    if K == 0:
        return constant(kc, 0.0)
    if K > 2 * kc:
        raise SingularSystem(f"{K} atoms exceed the interpolation capacity 2*kc={2 * kc}", "certificate")

    A = _interpolation_system(w.locations, kc)
    b = np.concatenate([np.sign(w.weights), np.zeros(K)])
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > rcond * sv[0]))
    if rank < min(A.shape):
        raise SingularSystem(
            f"interpolation system rank {rank} < {min(A.shape)} (atoms too clustered)", "certificate"
        )
    theta, *_ = np.linalg.lstsq(A, b, rcond=None)

    c = np.zeros(kc + 1, dtype=complex)
    c[0] = theta[0]
    c[1:] = (theta[1 : kc + 1] + 1j * theta[kc + 1 :]) / np.sqrt(2.0)
    return TrigPoly(c)


def _grid_size(kc: int) -> int:
    return max(settings.CERT_GRID_MIN, settings.CERT_GRID_FACTOR * (kc + 1))


def critical_points(p: TrigPoly, n_grid: Optional[int] = None) -> np.ndarray:
    """Roots of η' bracketed by sign changes on a dense grid, refined by brentq"""
    if not is_nonconstant(p, 0.0):
        return np.empty(0)
    n = n_grid or _grid_size(p.kc)
    dp = derivative(p)
    t = TWO_PI * np.arange(n) / n
    d = dp.sample(n)
    d_next = np.roll(d, -1)

    roots = list(t[d == 0.0])
    for j in np.nonzero(d * d_next < 0)[0]:
        lo, hi = t[j], t[j] + TWO_PI / n
        f_lo, f_hi = dp.eval(lo), dp.eval(hi)
        if f_lo * f_hi > 0 or f_lo == 0.0 or f_hi == 0.0:
            # FFT and direct evaluation disagree in sign only at a root sitting on the grid
            roots.append(lo if abs(f_lo) <= abs(f_hi) else hi)
            continue
        roots.append(brentq(dp.eval, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return np.sort(wrap(np.array(roots, dtype=float)))


def saturation_points(
    p: TrigPoly, tol: float = settings.CERT_SAT_TOL, n_grid: Optional[int] = None
) -> List[Tuple[float, int]]:
    """Signed saturation set {(t, sign η(t)) : |η(t)| >= 1 - tol}"""
    crit = critical_points(p, n_grid)
    if crit.size == 0:
        return []
    values = p.eval(crit)
    keep = np.abs(values) >= 1.0 - tol
    return [(float(t), int(np.sign(v))) for t, v in zip(crit[keep], values[keep])]


def lipschitz_bound(p: TrigPoly, n_grid: Optional[int] = None) -> float:
    """max_grid |η| + (π/N)·‖η'‖∞, where the sampled max|η'| is itself padded
    through Bernstein's inequality ‖η''‖∞ <= kc·‖η'‖∞"""
    n = n_grid or _grid_size(p.kc)
    delta = np.pi / n
    slope = float(np.max(np.abs(derivative(p).sample(n))))
    slope /= max(1.0 - delta * p.kc, np.finfo(float).eps)
    return float(np.max(np.abs(p.sample(n)))) + delta * slope


def sup_norm_bound(p: TrigPoly, n_grid: Optional[int] = None) -> float:
    """‖η‖∞ from the dense grid together with every bracketed critical point"""
    n = n_grid or _grid_size(p.kc)
    best = float(np.max(np.abs(p.sample(n))))
    crit = critical_points(p, n)
    if crit.size:
        best = max(best, float(np.max(np.abs(p.eval(crit)))))
    return best


@dataclass(frozen=True)
class CertificateCheck:
    sup_norm_ok: bool
    saturation_ok: bool
    worst_excess: float
    worst_saturation_gap: float
    nonconstant: bool = False
    feasible: bool = True
    lipschitz_excess: float = 0.0

    @property
    def passed(self) -> bool:
        return self.sup_norm_ok and self.saturation_ok and self.feasible

    @property
    def certifies_uniqueness(self) -> bool:
        return self.passed and self.nonconstant


def verify_certificate(
    p: TrigPoly,
    w: SparseMeasure,
    y: ObservationVector,
    sup_tol: float = settings.CERT_SUP_TOL,
    sat_tol: float = settings.CERT_SAT_TOL,
    tol_feas: float = settings.CERT_FEAS_TOL,
) -> CertificateCheck:
    if p.kc != y.kc:
        raise InvalidInput(f"certificate degree {p.kc} does not match kc={y.kc}", "certificate")

    mismatch = float(np.max(np.abs(forward_measure(w, y.kc).coeffs - y.coeffs)))
    feasible = mismatch <= tol_feas * max(1.0, y.max_abs())

    n = _grid_size(p.kc)
    worst_excess = sup_norm_bound(p, n) - 1.0
    if len(w):
        gap = float(np.max(np.abs(p.eval(w.locations) - np.sign(w.weights))))
    else:
        gap = 0.0

    check = CertificateCheck(
        sup_norm_ok=worst_excess <= sup_tol,
        saturation_ok=gap <= sat_tol,
        worst_excess=worst_excess,
        worst_saturation_gap=gap,
        nonconstant=is_nonconstant(p),
        feasible=feasible,
        lipschitz_excess=lipschitz_bound(p, n) - 1.0,
    )
    if not check.passed:
        logger.info(
            "certificate_rejected",
            worst_excess=worst_excess,
            saturation_gap=gap,
            feasibility_mismatch=mismatch,
        )
    return check
