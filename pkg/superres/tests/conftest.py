"""
Test configuration and fixtures for the superres toolkit
"""
import json

import numpy as np
import pytest

from superres.core.generators import alternating_comb
from superres.core.measures import ObservationVector, SparseMeasure, forward_measure


@pytest.fixture
def rng():
    """Seeded generator so randomized suites are reproducible."""
    return np.random.default_rng(20240617)


@pytest.fixture
def y_ones():
    """y = (1, 1, 1): observations of δ₀ at kc=2."""
    return ObservationVector([1.0, 1.0, 1.0])


@pytest.fixture
def y_identity():
    """y = (1, 0, 0): T_y is the identity."""
    return ObservationVector([1.0, 0.0, 0.0])


@pytest.fixture
def y_alternating_comb():
    """y = (0, 0, 4) from the alternating comb at kc=2."""
    return forward_measure(alternating_comb(2), 2)


@pytest.fixture
def two_atom_positive():
    """0.6 δ_1 + 0.4 δ_4."""
    return SparseMeasure(((1.0, 0.6), (4.0, 0.4)))


@pytest.fixture
def write_observation(tmp_path):
    """Write an observation file in the CLI format and return its path."""
    def _write(coeffs, name="y.json"):
        coeffs = np.asarray(coeffs, dtype=complex)
        path = tmp_path / name
        path.write_text(json.dumps({
            "kc": int(coeffs.size - 1),
            "y": [[float(c.real), float(c.imag)] for c in coeffs],
        }))
        return path
    return _write
