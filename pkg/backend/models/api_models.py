from pydantic import BaseModel, Field, field_validator
from typing import List, Optional, Tuple

from models.ensemble_models import EnsembleKind
from models.rotor_models import RotorParams, WavepacketSpec
from models.sweep_models import PhaseLabel


class SpectrumResponse(BaseModel):
    dimension: int
    alpha: float
    pt_broken: bool
    mean_r: float
    mean_neg_cos: float
    phase_label: PhaseLabel


class ClsrRequest(BaseModel):
    """Complex levels as [re, im] pairs"""

    points: List[Tuple[float, float]] = Field(..., min_length=3)

    class Config:
        json_schema_extra = {
            "example": {"points": [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [0.0, 2.0]]}
        }


class ClsrResponse(BaseModel):
    mean_r: float
    mean_neg_cos: float
    count: int


class OtocRequest(BaseModel):
    params: RotorParams
    wavepacket: WavepacketSpec = Field(default_factory=WavepacketSpec)
    steps: int = Field(30, ge=1, le=200)
    use_jitter: bool = False


class OtocResponse(BaseModel):
    times: List[int]
    c_raw: List[float]
    norm: List[float]
    c_norm: Optional[List[float]] = None
    alpha_fit: Optional[float] = None
    alpha_clamped: bool = False
    lambda_fit: Optional[float] = None
    fit_window: Optional[List[int]] = None
    max_imag_ratio: float = 0.0


class ClassifyRequest(BaseModel):
    clsr: float = Field(..., ge=0, le=1)
    alpha: float = Field(..., ge=0)


class ClassifyResponse(BaseModel):
    phase_label: PhaseLabel
    thresholds: dict


class RmtRequest(BaseModel):
    kind: EnsembleKind
    dim: int = Field(200, ge=8, le=2000)
    trials: int = Field(5, ge=1, le=100)
    seed: int = Field(0, ge=0)

    @field_validator("kind", mode="before")
    @classmethod
    def _lower(cls, value):
        return value.lower() if isinstance(value, str) else value
