"""
Exception hierarchy for the superres toolkit
"""
from typing import Optional


class SuperResError(Exception):
    """Base error; `stage` names the pipeline step or input field that failed"""
    def __init__(self, message: str, stage: Optional[str] = None):
        self.stage = stage
        self.message = message
        super().__init__(f"{stage}: {message}" if stage else message)


class InvalidInput(SuperResError):
    """Input violates an operation precondition"""


class ConvergenceFailure(SuperResError):
    """Iterative solver hit its iteration cap or missed its residual tolerance"""


class DecompositionFailure(SuperResError):
    """Vandermonde decomposition produced off-circle roots or nonpositive amplitudes"""


class SingularSystem(SuperResError):
    """A linear system is rank-deficient beyond tolerance"""


class RecoveryFailure(SuperResError):
    """Signed recovery failed; stage is one of grid, cluster, refine, verify"""


SOLVER_ERRORS = (ConvergenceFailure, DecompositionFailure, SingularSystem, RecoveryFailure)
