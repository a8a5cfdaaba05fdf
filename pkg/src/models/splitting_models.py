import math
from enum import Enum
from typing import Optional

import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.noise_models import DistSpec, NoiseFamily


class PgWeight(str, Enum):
    AS_PRINTED = "as_printed"
    INVERSE = "inverse"


class SplitConfig(BaseModel):
    alpha: Optional[float] = Field(
        None, gt=0, lt=1, description="Split strength for NEF and count families"
    )
    tau: Optional[float] = Field(
        None, gt=0, description="Recorruption strength for additive families"
    )
    aux: Optional[DistSpec] = Field(
        None, description="Auxiliary law of omega; the noise law itself when unset"
    )
    n_pairs: int = Field(1, ge=1, description="Monte Carlo pairs per image")
    pg_weight: PgWeight = PgWeight.AS_PRINTED

    def resolved_tau(self) -> float:
        """tau, or the Gaussian alpha-split equivalent sqrt(alpha / (1 - alpha))."""
        if self.tau is not None:
            return self.tau
        if self.alpha is not None:
            return math.sqrt(self.alpha / (1.0 - self.alpha))
        raise ValueError("SplitConfig needs either alpha or tau")

    def resolved_alpha(self) -> float:
        if self.alpha is None:
            raise ValueError("SplitConfig.alpha is required for this noise family")
        return self.alpha


class RecorruptedPair(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    y1: torch.Tensor
    y2: torch.Tensor
    weight: Optional[torch.Tensor] = None
    alpha: Optional[float] = None
    tau: Optional[float] = None
    family: NoiseFamily
    n_trials: Optional[int] = None

    @model_validator(mode="after")
    def check_shapes(self) -> "RecorruptedPair":
        if self.y1.shape != self.y2.shape:
            raise ValueError(
                f"y1 shape {tuple(self.y1.shape)} != y2 shape {tuple(self.y2.shape)}"
            )
        if self.weight is not None and self.weight.shape != self.y1.shape:
            raise ValueError(
                f"weight shape {tuple(self.weight.shape)} != pair shape "
                f"{tuple(self.y1.shape)}"
            )
        return self
