"""
Precondition helpers shared by the numerical modules
"""
import math
from typing import Sequence

from superres.utils.exceptions import InvalidInput


def validate_nonnegative_int(value: int, field: str) -> int:
    """Validate a nonnegative integer such as a cutoff frequency"""
    if isinstance(value, bool) or int(value) != value:
        raise InvalidInput(f"expected an integer, got {value!r}", field)
    if value < 0:
        raise InvalidInput(f"must be >= 0, got {value}", field)
    return int(value)


def validate_positive_int(value: int, field: str) -> int:
    value = validate_nonnegative_int(value, field)
    if value == 0:
        raise InvalidInput("must be >= 1", field)
    return value


def validate_positive_real(value: float, field: str) -> float:
    """Validate a finite, strictly positive real"""
    if not math.isfinite(value) or value <= 0:
        raise InvalidInput(f"must be a finite positive number, got {value}", field)
    return float(value)


def validate_finite(values: Sequence[float], field: str) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInput(f"non-finite value {v}", field)


def validate_grid_size(p: int, m: int) -> tuple:
    """Validate (P, M) for periodic B-spline grids: P >= M >= 1"""
    m = validate_positive_int(m, "m")
    p = validate_positive_int(p, "p")
    if p < m:
        raise InvalidInput(f"grid size P={p} must be >= spline order M={m}", "p")
    return p, m


def validate_p_list(p_list: Sequence[int], m: int) -> list:
    if not p_list:
        raise InvalidInput("at least one grid size is required", "p_list")
    return [validate_grid_size(p, m)[0] for p in p_list]
