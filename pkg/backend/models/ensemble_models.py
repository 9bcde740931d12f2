from pydantic import BaseModel, Field
from enum import Enum
from typing import List


class EnsembleKind(str, Enum):
    GINUE = "ginue"
    GINOE = "ginoe"
    AI_DAGGER = "aidagger"
    PT_SYMMETRIC = "ptsymmetric"
    GOE = "goe"
    POISSON_REAL = "poissonreal"
    POISSON_2D = "poisson2d"


class EnsembleSpec(BaseModel):
    kind: EnsembleKind = Field(..., description="Random-matrix class to sample")
    dim: int = Field(1000, ge=8, description="Matrix size")
    trials: int = Field(30, ge=1, description="Number of independent samples")
    seed: int = Field(0, ge=0)

    class Config:
        frozen = True
        extra = "forbid"
        json_schema_extra = {
            "example": {"kind": "ginue", "dim": 1000, "trials": 30, "seed": 0}
        }


class EnsembleResult(BaseModel):
    """Mean and spread of the complex spacing ratio statistics across trials"""

    kind: EnsembleKind
    dim: int
    trials: int
    mean_r: float
    std_r: float = Field(..., ge=0)
    mean_neg_cos: float
    std_neg_cos: float = Field(..., ge=0)
    per_trial_r: List[float] = Field(default_factory=list)
    per_trial_neg_cos: List[float] = Field(default_factory=list)

    class Config:
        frozen = True
        json_schema_extra = {
            "example": {
                "kind": "ginue",
                "dim": 1000,
                "trials": 30,
                "mean_r": 0.738,
                "std_r": 0.002,
                "mean_neg_cos": 0.233,
                "std_neg_cos": 0.009
            }
        }

    def summary(self) -> dict:
        return self.model_dump(mode="json", exclude={"per_trial_r", "per_trial_neg_cos"})
