from pydantic import BaseModel, Field, field_validator
from typing import Optional, Tuple
import numpy as np

from models.rotor_models import frozen_array


class OtocSeries(BaseModel):
    """Stroboscopic OTOC C(t), state norm N(t) and the normalized C~(t)"""

    times: np.ndarray
    c_raw: np.ndarray
    norm: np.ndarray
    c_norm: Optional[np.ndarray] = None
    alpha_fit: Optional[float] = None
    alpha_clamped: bool = False
    lambda_fit: Optional[float] = None
    fit_window: Optional[Tuple[int, int]] = None
    max_imag_ratio: float = 0.0

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("times", mode="before")
    @classmethod
    def _times(cls, value):
        return frozen_array(value, dtype=np.int64)

    @field_validator("c_raw", "norm", "c_norm", mode="before")
    @classmethod
    def _real(cls, value):
        if value is None:
            return None
        return frozen_array(value, dtype=np.float64)

    def fit_metadata(self) -> dict:
        return {
            "alpha_fit": self.alpha_fit,
            "alpha_clamped": self.alpha_clamped,
            "lambda_fit": self.lambda_fit,
            "fit_window": list(self.fit_window) if self.fit_window else None,
            "max_imag_ratio": self.max_imag_ratio,
        }


class AlphaFit(BaseModel):
    """Late-time growth fit of ln C(t); alpha = slope / 4"""

    alpha: float = Field(..., ge=0)
    slope: float
    window: Tuple[int, int]
    clamped: bool = False


class LyapunovFit(BaseModel):
    """Fit of ln C~(t) = ln a + 2 Lambda (t - 1) over the early exponential window"""

    lyapunov: float
    amplitude: float
    window: Tuple[int, int]
