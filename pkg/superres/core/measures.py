"""
Discrete periodic Radon measures, the Fourier forward operator and TV utilities
"""
from dataclasses import dataclass, field
from typing import Callable, Iterable, Tuple, Union

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment

from superres.config import settings
from superres.utils.exceptions import InvalidInput
from superres.utils.validation import validate_nonnegative_int

logger = structlog.get_logger(__name__)

TWO_PI = 2.0 * np.pi

AtomLike = Union["Atom", Tuple[float, float]]


def wrap(x):
    """Reduce locations modulo 2π into [0, 2π)"""
    r = np.mod(x, TWO_PI)
    # np.mod rounds tiny negative inputs up to exactly 2π
    return np.where(r >= TWO_PI, r - TWO_PI, r)


def circular_distance(x, y):
    """min(|Δ|, 2π − |Δ|) on the torus"""
    d = np.abs(np.mod(np.asarray(x) - np.asarray(y), TWO_PI))
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class Atom:
    location: float
    weight: float


def _canonical_atoms(atoms: Iterable[AtomLike], merge_tol: float) -> Tuple[Atom, ...]:
    pairs = [(a.location, a.weight) if isinstance(a, Atom) else (float(a[0]), float(a[1])) for a in atoms]
    if not pairs:
        return ()
    loc = wrap(np.array([p[0] for p in pairs], dtype=float))
    wts = np.array([p[1] for p in pairs], dtype=float)
    if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(wts))):
        raise InvalidInput("atom locations and weights must be finite", "atoms")
    order = np.argsort(loc, kind="stable")
    loc, wts = loc[order], wts[order]

    merged_loc = [loc[0]]
    merged_wts = [wts[0]]
    for x, a in zip(loc[1:], wts[1:]):
        if x - merged_loc[-1] <= merge_tol:
            merged_wts[-1] += a
        else:
            merged_loc.append(x)
            merged_wts.append(a)
    # seam at 0 / 2π
    if len(merged_loc) > 1 and (merged_loc[0] + TWO_PI - merged_loc[-1]) <= merge_tol:
        merged_wts[0] += merged_wts.pop()
        merged_loc.pop()

    return tuple(Atom(float(x), float(a)) for x, a in zip(merged_loc, merged_wts) if a != 0.0)


@dataclass(frozen=True)
class SparseMeasure:
    """Finite signed sum of Dirac masses, stored sorted by location.

    Coincident atoms (circular distance <= merge_tol) are merged by summing
    their weights; zero-weight atoms are dropped.
    """
    atoms: Tuple[Atom, ...] = ()
    merge_tol: float = field(default=settings.MERGE_TOL, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "atoms", _canonical_atoms(self.atoms, self.merge_tol))

    @classmethod
    def from_arrays(cls, locations, weights, merge_tol: float = settings.MERGE_TOL) -> "SparseMeasure":
        locations = np.atleast_1d(np.asarray(locations, dtype=float))
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if locations.shape != weights.shape:
            raise InvalidInput("locations and weights must have the same length", "atoms")
        return cls(tuple(zip(locations.tolist(), weights.tolist())), merge_tol)

    @property
    def locations(self) -> np.ndarray:
        return np.array([a.location for a in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms], dtype=float)

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def scaled(self, c: float) -> "SparseMeasure":
        return SparseMeasure.from_arrays(self.locations, c * self.weights, self.merge_tol)

    def negated(self) -> "SparseMeasure":
        return self.scaled(-1.0)

    def combine(self, other: "SparseMeasure") -> "SparseMeasure":
        """Sum of two measures in canonical form"""
        return SparseMeasure(self.atoms + other.atoms, self.merge_tol)

    def is_nonnegative(self) -> bool:
        return all(a.weight > 0 for a in self.atoms)

    def is_nonpositive(self) -> bool:
        return all(a.weight < 0 for a in self.atoms)

    def has_mixed_signs(self) -> bool:
        return any(a.weight > 0 for a in self.atoms) and any(a.weight < 0 for a in self.atoms)


class ObservationVector:
    """Fourier data y_0..y_Kc; y_{-k} = conj(y_k) is implicit."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs):
        values = np.array(coeffs, dtype=complex).ravel()
        if values.size == 0:
            raise InvalidInput("at least y_0 is required", "y")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("observations must be finite", "y")
        if values[0].imag != 0.0:
            raise InvalidInput(f"y_0 must be real, got imaginary part {values[0].imag}", "y")
        values.setflags(write=False)
        self._coeffs = values

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def kc(self) -> int:
        return self._coeffs.size - 1

    @property
    def y0(self) -> float:
        return float(self._coeffs[0].real)

    def __len__(self) -> int:
        return self._coeffs.size

    def __neg__(self) -> "ObservationVector":
        return ObservationVector(-self._coeffs)

    def scaled(self, c: float) -> "ObservationVector":
        return ObservationVector(float(c) * self._coeffs)

    def symmetric(self) -> np.ndarray:
        """y_{-Kc}..y_{Kc}"""
        return np.concatenate([np.conj(self._coeffs[:0:-1]), self._coeffs])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._coeffs)))

    def __repr__(self) -> str:
        return f"ObservationVector(kc={self.kc}, coeffs={np.array2string(self._coeffs, precision=6)})"


def forward_measure(w: SparseMeasure, kc: int) -> ObservationVector:
    """ν(w): coeffs[k] = Σ_j a_j e^{-i k x_j}, 0 <= k <= kc"""
    kc = validate_nonnegative_int(kc, "kc")
    if len(w) == 0:
        return ObservationVector(np.zeros(kc + 1, dtype=complex))
    k = np.arange(kc + 1)
    coeffs = np.exp(-1j * np.outer(k, w.locations)) @ w.weights
    coeffs[0] = complex(np.sum(w.weights), 0.0)
    return ObservationVector(coeffs)


def tv_norm(w: SparseMeasure) -> float:
    """‖w‖_M = ‖a‖_1"""
    return float(np.sum(np.abs(w.weights))) if len(w) else 0.0


def jordan_split(w: SparseMeasure) -> Tuple[SparseMeasure, SparseMeasure]:
    """w = w₊ − w₋ with disjoint supports"""
    positive = SparseMeasure(tuple(a for a in w.atoms if a.weight > 0), w.merge_tol)
    negative = SparseMeasure(tuple(Atom(a.location, -a.weight) for a in w.atoms if a.weight < 0), w.merge_tol)
    return positive, negative


def coeff_bound_check(w: SparseMeasure, kc: int, slack: float = settings.COEFF_BOUND_SLACK) -> bool:
    """|ŵ[k]| <= ‖w‖_M for all 0 <= k <= kc"""
    y = forward_measure(w, kc)
    return bool(np.max(np.abs(y.coeffs)) <= tv_norm(w) + slack)


def pairing(w: SparseMeasure, fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """⟨w, η⟩ = Σ_j a_j η(x_j)"""
    if len(w) == 0:
        return 0.0
    return float(np.dot(w.weights, np.asarray(fn(w.locations), dtype=float)))


def match_atoms(w1: SparseMeasure, w2: SparseMeasure) -> Tuple[float, float]:
    """Max circular location error and max weight error under the best
    one-to-one matching; (inf, inf) when the atom counts differ."""
    if len(w1) != len(w2):
        return float("inf"), float("inf")
    if len(w1) == 0:
        return 0.0, 0.0
    cost = circular_distance(w1.locations[:, None], w2.locations[None, :])
    rows, cols = linear_sum_assignment(cost)
    loc_err = float(np.max(cost[rows, cols]))
    wt_err = float(np.max(np.abs(w1.weights[rows] - w2.weights[cols])))
    return loc_err, wt_err
