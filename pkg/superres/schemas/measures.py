from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from superres.core.certificates import TrigPoly
from superres.core.measures import ObservationVector, SparseMeasure


class AtomSchema(BaseModel):
    x: float
    a: float


class MeasureSchema(BaseModel):
    atoms: List[AtomSchema] = Field(default_factory=list)

    @classmethod
    def from_measure(cls, w: SparseMeasure) -> "MeasureSchema":
        return cls(atoms=[AtomSchema(x=a.location, a=a.weight) for a in w])

    def to_measure(self) -> SparseMeasure:
        return SparseMeasure(tuple((atom.x, atom.a) for atom in self.atoms))


def _complex_pairs(values) -> List[Tuple[float, float]]:
    return [(float(v.real), float(v.imag)) for v in values]


class _HermitianCoefficients(BaseModel):
    """kc plus kc+1 [re, im] pairs whose first imaginary part is exactly zero"""
    kc: int = Field(..., ge=0)

    @staticmethod
    def _check(kc: int, pairs: List[Tuple[float, float]], name: str) -> None:
        if len(pairs) != kc + 1:
            raise ValueError(f"{name} must hold kc+1={kc + 1} entries, got {len(pairs)}")
        if pairs[0][1] != 0.0:
            raise ValueError(f"{name}[0] must be real")


class ObservationSchema(_HermitianCoefficients):
    y: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_shape(self):
        self._check(self.kc, self.y, "y")
        return self

    @classmethod
    def from_observation(cls, y: ObservationVector) -> "ObservationSchema":
        return cls(kc=y.kc, y=_complex_pairs(y.coeffs))

    def to_observation(self) -> ObservationVector:
        return ObservationVector(np.array([complex(re, im) for re, im in self.y]))


class TrigPolySchema(_HermitianCoefficients):
    c: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_shape(self):
        self._check(self.kc, self.c, "c")
        return self

    @classmethod
    def from_poly(cls, p: TrigPoly) -> "TrigPolySchema":
        return cls(kc=p.kc, c=_complex_pairs(p.coeffs))

    def to_poly(self) -> TrigPoly:
        return TrigPoly(np.array([complex(re, im) for re, im in self.c]))


class AtomSpecSchema(BaseModel):
    """`x:a,x:a,...` as accepted by the generate command"""
    text: str

    @field_validator("text")
    @classmethod
    def parse_pairs(cls, v: str) -> str:
        for chunk in v.split(","):
            parts = chunk.split(":")
            if len(parts) != 2:
                raise ValueError(f"atom '{chunk}' is not of the form x:a")
            float(parts[0]), float(parts[1])
        return v

    def to_measure(self) -> SparseMeasure:
        pairs = [tuple(float(s) for s in chunk.split(":")) for chunk in self.text.split(",")]
        return SparseMeasure(tuple(pairs))
