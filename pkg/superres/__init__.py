"""
superres: Toeplitz-spectrum analysis and sparse recovery for TV-minimal
super-resolution on the torus, plus the periodic B-spline grid solver.
"""
from superres.config import settings
from superres.utils.logging import configure_structlog

__version__ = "1.0.0"

configure_structlog(settings.LOG_JSON)
