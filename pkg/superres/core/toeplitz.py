"""
Hermitian Toeplitz matrices T_y, their spectra, regime classification and
the Carathéodory-Fejér-Pisarenko (Vandermonde) decomposition
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg
import structlog

from superres.config import settings
from superres.core.measures import ObservationVector, SparseMeasure, wrap
from superres.utils.exceptions import ConvergenceFailure, DecompositionFailure, SingularSystem

logger = structlog.get_logger(__name__)


class Regime(str, Enum):
    INDEFINITE = "Indefinite"
    PSD_RANK_DEFICIENT = "PsdRankDeficient"
    NSD_RANK_DEFICIENT = "NsdRankDeficient"
    POSITIVE_DEFINITE = "PositiveDefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    ZERO = "Zero"

    @property
    def mirror(self) -> "Regime":
        return _MIRROR[self]

    @property
    def is_positive_semidefinite(self) -> bool:
        return self in (Regime.PSD_RANK_DEFICIENT, Regime.POSITIVE_DEFINITE)


_MIRROR = {
    Regime.INDEFINITE: Regime.INDEFINITE,
    Regime.PSD_RANK_DEFICIENT: Regime.NSD_RANK_DEFICIENT,
    Regime.NSD_RANK_DEFICIENT: Regime.PSD_RANK_DEFICIENT,
    Regime.POSITIVE_DEFINITE: Regime.NEGATIVE_DEFINITE,
    Regime.NEGATIVE_DEFINITE: Regime.POSITIVE_DEFINITE,
    Regime.ZERO: Regime.ZERO,
}


@dataclass(frozen=True)
class ToeplitzMatrix:
    """T_y with dense[m][n] = y_{n-m} and y_{-k} = conj(y_k)"""
    first_row: np.ndarray

    @property
    def kc(self) -> int:
        return self.first_row.size - 1

    @cached_property
    def dense(self) -> np.ndarray:
        return scipy.linalg.toeplitz(np.conj(self.first_row), self.first_row)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.dense, "fro"))

    def observation(self) -> ObservationVector:
        return ObservationVector(self.first_row)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tol_eig: float

    @property
    def rank(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) > self.tol_eig))

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    rank: int
    min_eig: float
    max_eig: float
    tol_eig: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class VandermondeDecomposition:
    locations: np.ndarray
    amplitudes: np.ndarray
    sign: int = 1

    def __len__(self) -> int:
        return self.locations.size

    def to_measure(self) -> SparseMeasure:
        return SparseMeasure.from_arrays(self.locations, self.sign * self.amplitudes)

    def matrix(self, kc: int) -> np.ndarray:
        V = vandermonde(self.locations, kc)
        return self.sign * (V * self.amplitudes) @ V.conj().T

    def residual(self, T: ToeplitzMatrix) -> float:
        return float(np.linalg.norm(T.dense - self.matrix(T.kc), "fro"))


def build_toeplitz(y: ObservationVector) -> ToeplitzMatrix:
    """Exact Hermitian Toeplitz matrix from y_0..y_Kc"""
    row = np.array(y.coeffs, dtype=complex)
    row.setflags(write=False)
    return ToeplitzMatrix(row)


def vandermonde(locations, kc: int) -> np.ndarray:
    """V_x with columns e(x_j) = (1, e^{ix_j}, ..., e^{i kc x_j})"""
    k = np.arange(kc + 1)
    return np.exp(1j * np.outer(k, np.atleast_1d(locations)))


def steering(x: float, kc: int) -> np.ndarray:
    return np.exp(1j * np.arange(kc + 1) * x)


def eig_hermitian(
    T: ToeplitzMatrix,
    tol_eig: Optional[float] = None,
    residual_tol: float = settings.EIG_RESIDUAL_TOL,
) -> Spectrum:
    """Eigenvalues ascending with orthonormal eigenvectors; the reconstruction
    and orthonormality residuals are checked before returning."""
    A = T.dense
    try:
        lam, Q = np.linalg.eigh(A)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"Hermitian eigensolver failed: {e}", "eig")

    scale = max(1.0, float(np.linalg.norm(A, "fro")))
    reconstruction = float(np.linalg.norm(A - (Q * lam) @ Q.conj().T, "fro"))
    if reconstruction > residual_tol * scale:
        raise ConvergenceFailure(
            f"reconstruction residual {reconstruction:.3e} exceeds {residual_tol * scale:.3e}", "eig"
        )
    orthonormality = float(np.linalg.norm(Q.conj().T @ Q - np.eye(A.shape[0]), "fro"))
    if orthonormality > residual_tol:
        raise ConvergenceFailure(f"eigenvectors not orthonormal ({orthonormality:.3e})", "eig")

    if tol_eig is None:
        tol_eig = settings.EIG_REL_TOL * float(np.max(np.abs(lam)))
    return Spectrum(eigenvalues=lam, eigenvectors=Q, tol_eig=float(tol_eig))


def classify_regime(
    T: ToeplitzMatrix,
    tol_eig: Optional[float] = None,
    spectrum: Optional[Spectrum] = None,
) -> RegimeReport:
    """Classify the solution set of the TV problem from the spectrum of T_y"""
    n = T.kc + 1
    if float(np.max(np.abs(T.first_row))) <= settings.ZERO_ABS_TOL:
        return RegimeReport(Regime.ZERO, 0, 0.0, 0.0, settings.ZERO_ABS_TOL)

    if spectrum is None:
        spectrum = eig_hermitian(T, tol_eig)
    tol = spectrum.tol_eig if tol_eig is None else float(tol_eig)
    lam = spectrum.eigenvalues
    lo, hi = float(lam[0]), float(lam[-1])
    rank = int(np.sum(np.abs(lam) > tol))

    if lo < -tol and hi > tol:
        regime = Regime.INDEFINITE
    elif lo > tol:
        regime = Regime.POSITIVE_DEFINITE
    elif hi < -tol:
        regime = Regime.NEGATIVE_DEFINITE
    elif hi > tol:
        regime = Regime.PSD_RANK_DEFICIENT if rank < n else Regime.POSITIVE_DEFINITE
    elif lo < -tol:
        regime = Regime.NSD_RANK_DEFICIENT if rank < n else Regime.NEGATIVE_DEFINITE
    else:
        regime = Regime.ZERO

    logger.debug("regime_classified", regime=regime.value, rank=rank, min_eig=lo, max_eig=hi, tol_eig=tol)
    return RegimeReport(regime, rank, lo, hi, tol)


def is_positive_sequence(y: ObservationVector, rel_tol: float = 1e-10) -> bool:
    """Finite Herglotz check: T_y is PSD up to rel_tol * ‖T_y‖_2"""
    lam = eig_hermitian(build_toeplitz(y)).eigenvalues
    return bool(lam[0] >= -rel_tol * max(float(np.max(np.abs(lam))), 0.0))


def _null_energy_inverse(null_basis: np.ndarray, x) -> np.ndarray:
    kc = null_basis.shape[0] - 1
    E = vandermonde(x, kc) / np.sqrt(kc + 1)
    energy = np.sum(np.abs(null_basis.conj().T @ E) ** 2, axis=0)
    return 1.0 / np.maximum(energy, np.finfo(float).tiny)


def pseudospectrum(spectrum: Spectrum, x, rank: int, sign: int = 1) -> np.ndarray:
    """MUSIC pseudospectrum 1 / ‖P_null e(x)‖² (unit-norm e(x)); peaks sit
    on the atoms of a rank-`rank` semi-definite matrix"""
    n = spectrum.eigenvectors.shape[0]
    order = np.argsort(sign * spectrum.eigenvalues)
    return _null_energy_inverse(spectrum.eigenvectors[:, order[: n - rank]], x)


def decomposition_to_measure(dec: VandermondeDecomposition) -> SparseMeasure:
    """sign · Σ a_k δ_{x_k}"""
    return dec.to_measure()


def vandermonde_amplitudes(locations: np.ndarray, row: np.ndarray) -> np.ndarray:
    """Real least squares on Σ_j a_j e^{-ik x_j} = y_k"""
    kc = row.size - 1
    V = np.conj(vandermonde(locations, kc))
    A = np.vstack([V.real, V.imag])
    b = np.concatenate([row.real, row.imag])
    a, *_ = np.linalg.lstsq(A, b, rcond=None)
    return a


def cfp_decompose_deficient(
    T: ToeplitzMatrix,
    spectrum: Optional[Spectrum] = None,
    rank: Optional[int] = None,
    null_vector: Optional[np.ndarray] = None,
    tol_root: float = settings.ROOT_TOL,
    residual_tol: float = settings.DECOMPOSITION_RESIDUAL_TOL,
) -> VandermondeDecomposition:
    """Unique decomposition T = sign * V_x D_a V_x* of a rank-deficient
    semi-definite Toeplitz matrix.

    Locations are the unimodular roots of the polynomial Σ conj(u_k) z^k for
    a null vector u; when the null space has dimension > 1 only the K roots
    best annihilated by the whole null space (MUSIC pseudospectrum peaks)
    are kept.
    """
    if spectrum is None:
        spectrum = eig_hermitian(T)
    report = classify_regime(T, spectrum=spectrum)
    if report.regime in (Regime.PSD_RANK_DEFICIENT, Regime.POSITIVE_DEFINITE):
        sign = 1
    elif report.regime in (Regime.NSD_RANK_DEFICIENT, Regime.NEGATIVE_DEFINITE):
        sign = -1
    elif report.regime == Regime.ZERO:
        return VandermondeDecomposition(np.empty(0), np.empty(0), 1)
    else:
        raise DecompositionFailure(f"matrix is {report.regime.value}, not semi-definite", "cfp")

    n = T.kc + 1
    K = report.rank if rank is None else int(rank)
    if K >= n:
        raise DecompositionFailure(f"rank {K} is not deficient for size {n}", "cfp")
    if K == 0:
        return VandermondeDecomposition(np.empty(0), np.empty(0), sign)

    order = np.argsort(sign * spectrum.eigenvalues)
    null_basis = spectrum.eigenvectors[:, order[: n - K]]
    u = null_basis[:, 0] if null_vector is None else np.asarray(null_vector, dtype=complex)

    roots = np.roots(np.conj(u)[::-1])
    if roots.size < K:
        raise DecompositionFailure(f"null polynomial has {roots.size} roots, need {K}", "cfp")
    candidates = np.angle(roots)
    score = _null_energy_inverse(null_basis, candidates)
    chosen = np.argsort(-score)[:K]
    off_circle = np.abs(np.abs(roots[chosen]) - 1.0)
    if np.max(off_circle) > tol_root:
        logger.warning("cfp_root_off_circle", deviation=float(np.max(off_circle)), tol_root=tol_root)
        raise DecompositionFailure(
            f"recovered root lies {np.max(off_circle):.3e} from the unit circle", "cfp"
        )

    locations = wrap(candidates[chosen])
    amplitudes = vandermonde_amplitudes(locations, sign * T.first_row)
    if np.any(amplitudes <= 0):
        raise DecompositionFailure(f"nonpositive amplitude {np.min(amplitudes):.3e}", "cfp")

    order = np.argsort(locations)
    dec = VandermondeDecomposition(locations[order], amplitudes[order], sign)
    _check_residual(dec, T, residual_tol)
    return dec


def cfp_decompose_full(
    T: ToeplitzMatrix,
    anchor: float,
    spectrum: Optional[Spectrum] = None,
    tol_root: float = settings.ROOT_TOL,
    residual_tol: float = settings.DECOMPOSITION_RESIDUAL_TOL,
) -> VandermondeDecomposition:
    """One of the uncountably many decompositions of a definite Toeplitz
    matrix, with an atom at `anchor` of weight 1 / (e* T⁻¹ e)."""
    report = classify_regime(T, spectrum=spectrum)
    if report.regime == Regime.POSITIVE_DEFINITE:
        sign = 1
    elif report.regime == Regime.NEGATIVE_DEFINITE:
        sign = -1
    else:
        raise DecompositionFailure(f"matrix is {report.regime.value}, not definite", "cfp")

    kc = T.kc
    anchor = float(wrap(anchor))
    e = steering(anchor, kc)
    try:
        solution = scipy.linalg.solve(sign * T.dense, e, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(f"T^-1 e(anchor) solve failed: {exc}", "cfp")
    quad = float(np.real(np.vdot(e, solution)))
    if not np.isfinite(quad) or quad <= 0:
        raise SingularSystem(f"e* T^-1 e = {quad} is not positive", "cfp")
    a_anchor = 1.0 / quad

    row = sign * T.first_row - a_anchor * np.exp(-1j * np.arange(kc + 1) * anchor)
    row[0] = row[0].real
    remainder = cfp_decompose_deficient(
        ToeplitzMatrix(row),
        rank=kc,
        null_vector=solution / np.linalg.norm(solution),
        tol_root=tol_root,
        residual_tol=residual_tol,
    )

    locations = np.concatenate([[anchor], remainder.locations])
    amplitudes = np.concatenate([[a_anchor], remainder.amplitudes])
    order = np.argsort(locations)
    dec = VandermondeDecomposition(locations[order], amplitudes[order], sign)
    _check_residual(dec, T, residual_tol)
    return dec


def _check_residual(dec: VandermondeDecomposition, T: ToeplitzMatrix, residual_tol: float) -> None:
    residual = dec.residual(T)
    bound = residual_tol * max(1.0, T.frobenius())
    if residual > bound:
        raise DecompositionFailure(f"residual {residual:.3e} exceeds {bound:.3e}", "cfp")
