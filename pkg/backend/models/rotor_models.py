from pydantic import BaseModel, Field, field_validator, model_validator
import numpy as np
import math


def frozen_array(values, dtype=None) -> np.ndarray:
    """Copy into a read-only numpy array"""
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class RotorParams(BaseModel):
    """Physical and numerical parameters of the PT-symmetric kicked rotor"""

    K: float = Field(..., ge=0, description="Kicking strength")
    lam: float = Field(0.0, ge=0, alias="lambda", description="Non-Hermiticity parameter")
    hbar_eff: float = Field(0.2, gt=0, description="Effective Planck constant")
    m: float = Field(1.0, gt=0, description="Moment of inertia")
    tau: float = Field(1.0, gt=0, description="Kick period")
    half_size: int = Field(64, ge=2, description="N: momentum indices k run over [-N, N-1]")
    jitter_amplitude: float = Field(1e-3, ge=0, description="Upper bound of the uniform mass perturbation")
    seed: int = Field(0, ge=0, description="RNG seed for the mass jitter")

    class Config:
        frozen = True
        extra = "forbid"
        populate_by_name = True
        json_schema_extra = {
            "example": {
                "K": 15.0,
                "lambda": 0.01,
                "hbar_eff": 0.2,
                "m": 1.0,
                "tau": 1.0,
                "half_size": 1000,
                "jitter_amplitude": 0.001,
                "seed": 7
            }
        }

    @property
    def dimension(self) -> int:
        return 2 * self.half_size

    def momentum_indices(self) -> np.ndarray:
        """Momentum quantum numbers k = -N .. N-1 in storage order"""
        return np.arange(-self.half_size, self.half_size)

    def momenta(self) -> np.ndarray:
        return self.hbar_eff * self.momentum_indices()

    def echo(self) -> dict:
        return self.model_dump(by_alias=True)


class WavepacketSpec(BaseModel):
    """Gaussian wave packet centred on momentum index k0"""

    k0: int = Field(0, description="Centre momentum index, p0 = hbar_eff * k0")
    sigma: float = Field(4.0, gt=0, description="Width of the packet in momentum")

    class Config:
        frozen = True
        extra = "forbid"
        json_schema_extra = {"example": {"k0": 0, "sigma": 4.0}}

    def check_against(self, params: RotorParams) -> None:
        """Invariants that depend on the rotor parameters"""
        p0 = params.hbar_eff * self.k0
        if abs(p0) > math.pi:
            raise ValueError(f"p0 = hbar_eff*k0 = {p0:.6g} lies outside [-pi, pi]")
        if not -params.half_size <= self.k0 < params.half_size:
            raise ValueError(f"k0 = {self.k0} is outside the momentum window [-{params.half_size}, {params.half_size - 1}]")


class StateVector(BaseModel):
    """Amplitudes over the momentum basis, index i <-> k = i - N"""

    amplitudes: np.ndarray

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex(cls, value):
        array = np.asarray(value, dtype=np.complex128)
        if array.ndim != 1:
            raise ValueError("state amplitudes must be one-dimensional")
        if array.size % 2:
            raise ValueError("state length must be even (2N)")
        if not np.all(np.isfinite(array)):
            raise ValueError("state amplitudes must be finite")
        return frozen_array(array)

    @property
    def half_size(self) -> int:
        return self.amplitudes.size // 2

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


class FloquetDense(BaseModel):
    """One-period Floquet operator as a dense matrix in the momentum basis"""

    matrix: np.ndarray
    params: RotorParams
    jitter: np.ndarray

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_shape(self):
        dim = self.params.dimension
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"Floquet matrix must be {dim}x{dim}, got {self.matrix.shape}")
        if self.jitter.shape != (dim,):
            raise ValueError(f"jitter must have length {dim}")
        return self

    @property
    def dimension(self) -> int:
        return self.params.dimension


class SplitStepApplicator(BaseModel):
    """Matrix-free Floquet operator: kinetic half steps around an angle-space kick"""

    kinetic_phases: np.ndarray
    kick_phases: np.ndarray
    grid_size: int
    params: RotorParams
    jitter: np.ndarray

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_grid(self):
        dim = self.params.dimension
        if self.grid_size != dim:
            raise ValueError(f"angle grid size must equal the basis dimension {dim}")
        if self.kinetic_phases.shape != (dim,) or self.kick_phases.shape != (self.grid_size,):
            raise ValueError("phase arrays do not match the basis dimension")
        return self

    @property
    def dimension(self) -> int:
        return self.params.dimension
