from pydantic import BaseModel, Field, ValidationError, field_validator
from enum import Enum
from typing import List, Optional

from models.rotor_models import RotorParams, WavepacketSpec
from models.ensemble_models import EnsembleKind, EnsembleSpec
from models.sweep_models import Diagnostic, GridSpec


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def _split_list(value):
    if isinstance(value, str):
        return [float(item) for item in value.replace(";", ",").split(",") if item.strip()]
    return value


class RotorSection(BaseModel):
    """Partial RotorParams; unset keys fall back to the model defaults"""

    K: Optional[float] = None
    lam: Optional[float] = Field(None, alias="lambda")
    hbar_eff: Optional[float] = None
    m: Optional[float] = None
    tau: Optional[float] = None
    half_size: Optional[int] = None
    jitter_amplitude: Optional[float] = None
    seed: Optional[int] = None

    class Config:
        extra = "forbid"
        populate_by_name = True


class WavepacketSection(BaseModel):
    k0: Optional[int] = None
    sigma: Optional[float] = None

    class Config:
        extra = "forbid"


class GridSection(BaseModel):
    k_values: List[float] = Field(default_factory=list)
    lambda_values: List[float] = Field(default_factory=list)
    diagnostics: List[Diagnostic] = Field(default_factory=lambda: [Diagnostic.CLSR, Diagnostic.ALPHA])
    base_seed: int = 0
    parallelism: Optional[int] = Field(None, ge=1)
    checkpoint: Optional[str] = None

    class Config:
        extra = "forbid"

    @field_validator("k_values", "lambda_values", mode="before")
    @classmethod
    def _lists(cls, value):
        return _split_list(value)

    @field_validator("diagnostics", mode="before")
    @classmethod
    def _diagnostics(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value


class EnsembleSection(BaseModel):
    kind: Optional[EnsembleKind] = None
    dim: Optional[int] = None
    trials: Optional[int] = None
    seed: Optional[int] = None

    class Config:
        extra = "forbid"


class OtocSection(BaseModel):
    steps: int = Field(30, ge=1)
    use_jitter: bool = False

    class Config:
        extra = "forbid"


class OutputSection(BaseModel):
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON

    class Config:
        extra = "forbid"


class RunConfig(BaseModel):
    """Effective run configuration: defaults < config file < command-line flags"""

    rotor: RotorSection = Field(default_factory=RotorSection)
    wavepacket: WavepacketSection = Field(default_factory=WavepacketSection)
    grid: GridSection = Field(default_factory=GridSection)
    ensemble: EnsembleSection = Field(default_factory=EnsembleSection)
    otoc: OtocSection = Field(default_factory=OtocSection)
    output: OutputSection = Field(default_factory=OutputSection)

    class Config:
        frozen = True
        extra = "forbid"

    def rotor_params(self, **overrides) -> RotorParams:
        values = {"K": 1.0}
        values.update(self.rotor.model_dump(exclude_none=True))
        values.update(overrides)
        return RotorParams(**values)

    def wavepacket_spec(self) -> WavepacketSpec:
        return WavepacketSpec(**self.wavepacket.model_dump(exclude_none=True))

    def ensemble_spec(self) -> EnsembleSpec:
        values = self.ensemble.model_dump(exclude_none=True)
        values.setdefault("kind", EnsembleKind.GINUE)
        return EnsembleSpec(**values)

    def grid_spec(self) -> GridSpec:
        return GridSpec(
            k_values=self.grid.k_values,
            lambda_values=self.grid.lambda_values,
            base=self.rotor_params(),
            diagnostics=self.grid.diagnostics,
            base_seed=self.grid.base_seed,
            wavepacket=self.wavepacket_spec(),
            otoc_steps=self.otoc.steps,
        )

    def echo(self) -> dict:
        """Configuration as the run used it, model defaults filled in"""
        resolved = self.model_dump(mode="json", by_alias=True, exclude_none=True)
        for section, build in (("rotor", self.rotor_params), ("wavepacket", self.wavepacket_spec), ("ensemble", self.ensemble_spec)):
            try:
                resolved[section] = build().model_dump(mode="json", by_alias=True)
            except ValidationError:
                # left as given; the command that needs it reports the error
                pass
        return resolved
