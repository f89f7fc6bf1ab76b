from datetime import datetime, timezone
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from superres.core.bpc import SolutionKind, SolutionReport
from superres.core.certificates import CertificateCheck
from superres.core.convergence import ConvergenceResult
from superres.core.toeplitz import Regime, RegimeReport
from superres.schemas.measures import MeasureSchema, TrigPolySchema


class RunManifest(BaseModel):
    command: str
    seed: int = Field(..., ge=0, lt=2 ** 64)
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    version: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class RegimeReportSchema(BaseModel):
    regime: Regime
    rank: int
    min_eig: float
    max_eig: float
    tol_eig: float

    @classmethod
    def from_report(cls, r: RegimeReport) -> "RegimeReportSchema":
        return cls(regime=r.regime, rank=r.rank, min_eig=r.min_eig, max_eig=r.max_eig, tol_eig=r.tol_eig)


class CertificateCheckSchema(BaseModel):
    sup_norm_ok: bool
    saturation_ok: bool
    worst_excess: float
    worst_saturation_gap: float
    nonconstant: bool
    feasible: bool
    lipschitz_excess: float

    @classmethod
    def from_check(cls, c: CertificateCheck) -> "CertificateCheckSchema":
        return cls(
            sup_norm_ok=c.sup_norm_ok,
            saturation_ok=c.saturation_ok,
            worst_excess=c.worst_excess,
            worst_saturation_gap=c.worst_saturation_gap,
            nonconstant=c.nonconstant,
            feasible=c.feasible,
            lipschitz_excess=c.lipschitz_excess,
        )


class SolutionReportSchema(BaseModel):
    regime: Regime
    kind: SolutionKind
    rank: int
    min_tv: float
    solution: Optional[MeasureSchema] = None
    samples: List[MeasureSchema] = Field(default_factory=list)
    certificate: Optional[TrigPolySchema] = None
    certificate_check: Optional[CertificateCheckSchema] = None
    oracle_min_tv: Optional[float] = None
    oracle_gap: Optional[float] = None

    @classmethod
    def from_report(cls, r: SolutionReport) -> "SolutionReportSchema":
        return cls(
            regime=r.regime.regime,
            kind=r.kind,
            rank=r.regime.rank,
            min_tv=r.min_tv,
            solution=None if r.solution is None else MeasureSchema.from_measure(r.solution),
            samples=[MeasureSchema.from_measure(w) for w in r.sample_solutions],
            certificate=None if r.certificate is None else TrigPolySchema.from_poly(r.certificate),
            certificate_check=None if r.certificate_check is None else CertificateCheckSchema.from_check(r.certificate_check),
            oracle_min_tv=r.oracle_min_tv,
            oracle_gap=r.oracle_gap,
        )


class ReconstructionSchema(BaseModel):
    t: List[float]
    f: List[float]


class GridSolutionSchema(BaseModel):
    p: int
    m: int
    kc: int
    lam: float = Field(..., alias="lambda")
    c: List[float]
    innovation: List[float]
    knots: List[float]
    objective: float
    iterations: int
    mean: float
    reconstruction: ReconstructionSchema

    class Config:
        populate_by_name = True


class ConvergenceRowSchema(BaseModel):
    p: int = Field(..., alias="P")
    mean_linf_error: float
    std_linf_error: float
    runs: int

    class Config:
        populate_by_name = True


class ConvergenceSummarySchema(BaseModel):
    rows: List[ConvergenceRowSchema]
    slope: float
    violations: Dict[int, int]
    failed_cells: List[List[int]]

    @classmethod
    def from_result(cls, r: ConvergenceResult) -> "ConvergenceSummarySchema":
        return cls(
            rows=[
                ConvergenceRowSchema(P=row.p, mean_linf_error=row.mean_linf_error, std_linf_error=row.std_linf_error, runs=row.runs)
                for row in r.rows
            ],
            slope=r.slope,
            violations=r.violations,
            failed_cells=[list(cell) for cell in r.failed_cells],
        )
