"""
Preset and random measures and splines for tests, the CLI and experiments
"""
from typing import Optional

import numpy as np

from superres.core.grid_spline import SplineSpec
from superres.core.measures import TWO_PI, SparseMeasure
from superres.utils.exceptions import InvalidInput
from superres.utils.validation import validate_nonnegative_int, validate_positive_int

WEIGHT_LOW = 0.2
WEIGHT_HIGH = 1.0


def alternating_comb(kc: int) -> SparseMeasure:
    """Σ_{k<2kc} (-1)^k δ_{πk/kc}, the alternating comb whose certificate is cos(kc·t)"""
    kc = validate_positive_int(kc, "kc")
    k = np.arange(2 * kc)
    return SparseMeasure.from_arrays(np.pi * k / kc, (-1.0) ** k)


def separated_locations(rng: np.random.Generator, count: int, separation: float) -> np.ndarray:
    """count points on the torus with pairwise circular distance >= separation"""
    count = validate_nonnegative_int(count, "count")
    if count == 0:
        return np.empty(0)
    slack = TWO_PI - count * separation
    if slack <= 0:
        raise InvalidInput(f"cannot place {count} atoms {separation:.4f} apart", "separation")
    gaps = np.sort(rng.uniform(0.0, slack, count))
    return np.mod(gaps + separation * np.arange(count) + rng.uniform(0.0, TWO_PI), TWO_PI)


def default_separation(kc: int) -> float:
    return TWO_PI * 0.5 / max(kc, 1)


def random_nonnegative(
    rng: np.random.Generator, count: int, kc: int, separation: Optional[float] = None
) -> SparseMeasure:
    """Weights ~ U(0.2, 1) at separated uniform locations"""
    x = separated_locations(rng, count, default_separation(kc) if separation is None else separation)
    return SparseMeasure.from_arrays(x, rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, x.size))


def random_signed(
    rng: np.random.Generator, count: int, kc: int, separation: Optional[float] = None
) -> SparseMeasure:
    """Weights ±U(0.2, 1) with at least one of each sign when count >= 2"""
    x = separated_locations(rng, count, default_separation(kc) if separation is None else separation)
    signs = rng.choice([-1.0, 1.0], x.size)
    if x.size >= 2 and abs(signs.sum()) == x.size:
        signs[rng.integers(x.size)] *= -1.0
    return SparseMeasure.from_arrays(x, signs * rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, x.size))


def random_spline(rng: np.random.Generator, n_knots: int, m: int, mean: float = 0.0) -> SplineSpec:
    """One knot uniform on each of n_knots equal arcs, Gaussian amplitudes projected to zero sum"""
    n_knots = validate_positive_int(n_knots, "n_knots")
    if n_knots < 2:
        raise InvalidInput("a periodic spline with nonzero innovation needs at least two knots", "n_knots")
    arc = TWO_PI / n_knots
    knots = arc * (np.arange(n_knots) + rng.uniform(0.0, 1.0, n_knots))
    amplitudes = rng.standard_normal(n_knots)
    amplitudes -= amplitudes.mean()
    return SplineSpec(knots=knots, amplitudes=amplitudes, m=m, mean=mean)
