from pydantic import BaseModel, Field, field_validator
from enum import Enum
from typing import List, Optional, Tuple

from models.rotor_models import RotorParams, WavepacketSpec


class PhaseLabel(str, Enum):
    PT_INTEGRABLE = "PT-integrable"
    PT_CHAOTIC = "PT-chaotic"
    PT_BROKEN_CHAOTIC = "PT-broken-chaotic"


class Diagnostic(str, Enum):
    CLSR = "clsr"
    ALPHA = "alpha"
    RLSR = "rlsr"
    OTOC = "otoc"


class GridSpec(BaseModel):
    """(K, lambda) grid; K and lambda of `base` are overridden per cell"""

    k_values: List[float] = Field(..., min_length=1)
    lambda_values: List[float] = Field(..., min_length=1)
    base: RotorParams
    diagnostics: List[Diagnostic] = Field(default_factory=lambda: [Diagnostic.CLSR, Diagnostic.ALPHA])
    base_seed: int = Field(0, ge=0)
    wavepacket: WavepacketSpec = Field(default_factory=WavepacketSpec)
    otoc_steps: int = Field(30, ge=1)

    class Config:
        frozen = True
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "k_values": [0.5, 2.0, 8.0, 30.0],
                "lambda_values": [0.0, 0.001, 0.01],
                "base": {"K": 1.0, "lambda": 0.0, "hbar_eff": 0.2, "half_size": 1000},
                "diagnostics": ["clsr", "alpha"],
                "base_seed": 11
            }
        }

    @field_validator("k_values", "lambda_values")
    @classmethod
    def _strictly_increasing(cls, values):
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("grid axis values must be strictly increasing")
        if any(v < 0 for v in values):
            raise ValueError("grid axis values must be non-negative")
        return values

    @field_validator("diagnostics")
    @classmethod
    def _unique(cls, values):
        return sorted(set(values), key=lambda d: list(Diagnostic).index(d))

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.k_values), len(self.lambda_values)

    def cells(self) -> List[Tuple[int, int]]:
        return [(i, j) for i in range(len(self.k_values)) for j in range(len(self.lambda_values))]


class SweepRecord(BaseModel):
    """One completed (K, lambda) cell"""

    i: int
    j: int
    K: float
    lam: float = Field(..., alias="lambda")
    seed: int
    status: str = "ok"
    clsr: Optional[float] = None
    neg_cos: Optional[float] = None
    rlsr: Optional[float] = None
    alpha: Optional[float] = None
    pt_broken: Optional[bool] = None
    phase_label: Optional[PhaseLabel] = None
    lyapunov: Optional[float] = None
    error: Optional[str] = None
    wall_time: float = 0.0

    class Config:
        populate_by_name = True

    def payload(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


class SweepResult(BaseModel):
    grid: GridSpec
    records: List[SweepRecord]
    computed: List[Tuple[int, int]] = Field(default_factory=list)
    thresholds: dict = Field(default_factory=dict)

    @property
    def failed(self) -> List[Tuple[int, int]]:
        return [(r.i, r.j) for r in self.records if r.status != "ok"]

    @property
    def complete(self) -> bool:
        return len(self.records) == len(self.grid.cells())
