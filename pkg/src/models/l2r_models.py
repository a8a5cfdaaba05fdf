from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator


class CorrelationWeight(str, Enum):
    TWO_OVER_TAU = "2/tau"
    TWO = "2"
    ONE = "1"


class HObjective(str, Enum):
    LAGRANGIAN = "lagrangian"
    GR2R = "gr2r"


class RecorruptorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    depth: int = Field(3, ge=1, description="Linear layers in the scalar map")
    width: int = Field(8, ge=1, description="Hidden units per layer")
    kernel_size: int = Field(1, ge=1, description="Odd spatial extent of k")
    monotone: bool = Field(True, description="Positive weight reparameterization")
    residual: bool = Field(False, description="Add w' to the scalar map output")
    pg_scale: bool = Field(False, description="Scale the output by sqrt(y)")
    init_scale: float = Field(1.0, gt=0, description="Value of the delta kernel at init")

    @field_validator("kernel_size")
    @classmethod
    def odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"kernel_size={value} must be odd")
        return value


class L2RConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tau: float = Field(1.0, gt=0)
    joint: bool = True
    use_stop_gradient: bool = True
    f_lr: float = Field(1e-3, ge=0)
    h_lr: float = Field(1e-3, ge=0)
    id_pretrain_steps: int = Field(200, ge=0)
    correlation_weight: CorrelationWeight = CorrelationWeight.TWO_OVER_TAU
    h_objective: HObjective = HObjective.LAGRANGIAN

    @property
    def correlation_factor(self) -> float:
        if self.correlation_weight == CorrelationWeight.TWO_OVER_TAU:
            return 2.0 / self.tau
        return float(self.correlation_weight.value)


class DiagnosticsRecord(BaseModel):
    epoch: int
    c_eps: float
    c_h: float
    se_eps: Optional[float] = None
    se_h: Optional[float] = None

    @computed_field
    @property
    def c_delta(self) -> float:
        return abs(self.c_eps - self.c_h)
