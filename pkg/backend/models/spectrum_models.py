from pydantic import BaseModel, Field, field_validator
from typing import Optional
import numpy as np

from models.rotor_models import frozen_array


class QuasienergySpectrum(BaseModel):
    """Quasienergies eps = i ln(mu), Re eps folded to [-pi, pi)"""

    epsilons: np.ndarray
    mus: np.ndarray
    alpha: float

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("epsilons", "mus", mode="before")
    @classmethod
    def _complex(cls, value):
        return frozen_array(value, dtype=np.complex128)

    @property
    def size(self) -> int:
        return int(self.epsilons.size)


class RatioStats(BaseModel):
    """Complex level spacing ratios and their aggregates"""

    xis: np.ndarray
    mean_r: float = Field(..., ge=0, le=1)
    mean_neg_cos: float = Field(..., ge=-1, le=1)
    count: int

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("xis", mode="before")
    @classmethod
    def _complex(cls, value):
        return frozen_array(value, dtype=np.complex128)

    def summary(self) -> dict:
        return {"mean_r": self.mean_r, "mean_neg_cos": self.mean_neg_cos, "count": self.count}


class UnfoldedSpectrum(BaseModel):
    """Dimensionless nearest-neighbour spacings; densities only for complex spectra"""

    spacings: np.ndarray
    densities: Optional[np.ndarray] = None

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("spacings", "densities", mode="before")
    @classmethod
    def _real(cls, value):
        if value is None:
            return None
        return frozen_array(value, dtype=np.float64)


class SpacingHistogram(BaseModel):
    """Probability-density histogram of unfolded spacings"""

    edges: np.ndarray
    density: np.ndarray
    count: int

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])
