from enum import Enum
from typing import List, Optional

import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.l2r_models import CorrelationWeight, HObjective
from src.models.noise_models import NoiseModel
from src.models.splitting_models import PgWeight

HISTORY_COLUMNS = ["epoch", "lr", "loss", "psnr", "ssim", "c_eps", "c_h", "c_delta", "div"]
EVALUATION_COLUMNS = ["image", "psnr", "ssim", "psnr_capped"]


class LossKind(str, Enum):
    SUPERVISED = "supervised"
    GR2R = "gr2r"
    L2R = "l2r"
    SURE = "sure"
    UNSURE = "unsure"


class DenoiserKind(str, Enum):
    TOY_CNN = "toy_cnn"
    IDENTITY = "identity"


class HeadKind(str, Enum):
    AUTO = "auto"
    LINEAR = "linear"
    SIGMOID = "sigmoid"


class Schedule(BaseModel):
    lr_start: float = Field(..., ge=0)
    lr_end: float = Field(..., ge=0)
    total_steps: int = Field(..., ge=1)


class DataSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_dir: str = Field(..., description="Directory of clean training PGMs")
    val_dir: str = Field(..., description="Directory of clean validation PGMs")
    out_dir: str = Field("runs/default", description="Run output directory")
    seed: int = 0


class DenoiserSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: DenoiserKind = DenoiserKind.TOY_CNN
    channels: int = Field(16, ge=1)
    layers: int = Field(3, ge=2)
    head: HeadKind = HeadKind.AUTO


class LossSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: LossKind = LossKind.SUPERVISED
    alpha: Optional[float] = Field(None, gt=0, lt=1)
    tau: float = Field(1.0, gt=0)
    pg_weight: PgWeight = PgWeight.AS_PRINTED
    mc_probes: int = Field(1, ge=1)
    fd_step: float = Field(1e-4, gt=0, le=1e-2)
    eta_init: float = 0.0
    eta_step: float = Field(1e-2, gt=0)


class RecorruptorSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    depth: int = Field(3, ge=1)
    width: int = Field(8, ge=1)
    kernel_size: int = Field(1, ge=1)
    monotone: bool = True
    residual: bool = False
    pg_scale: bool = False
    init_scale: float = Field(1.0, gt=0)
    joint: bool = True
    use_stop_gradient: bool = True
    h_lr: float = Field(1e-3, ge=0)
    id_pretrain_steps: int = Field(200, ge=0)
    correlation_weight: CorrelationWeight = CorrelationWeight.TWO_OVER_TAU
    h_objective: HObjective = HObjective.LAGRANGIAN


class OptimSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr_start: float = Field(1e-3, ge=0)
    lr_end: float = Field(1e-5, ge=0)
    weight_decay: float = Field(0.01, ge=0)
    epochs: int = Field(200, ge=1)
    batch_size: int = Field(16, ge=1)
    diag_mc: int = Field(4, ge=1, description="Recorruption draws per diagnostics image")


class RunConfig(BaseModel):
    """Sections of the flat run-config text file."""

    model_config = ConfigDict(extra="forbid")

    data: DataSection
    noise: NoiseModel
    denoiser: DenoiserSection = Field(default_factory=DenoiserSection)
    loss: LossSection = Field(default_factory=LossSection)
    recorruptor: RecorruptorSection = Field(default_factory=RecorruptorSection)
    optim: OptimSection = Field(default_factory=OptimSection)

    @model_validator(mode="after")
    def check_consistency(self) -> "RunConfig":
        """Reject loss and noise pairings train() cannot run.

        SURE in training takes additive_gaussian noise only; the Sigma-weighted
        correlated objective is exposed as a function, not as a training loss.
        """
        family = self.noise.family.value
        if self.loss.kind == LossKind.SURE and family != "additive_gaussian":
            raise ValueError(f"loss 'sure' needs additive_gaussian noise, got '{family}'")
        if self.loss.kind == LossKind.L2R and not (
            self.noise.is_additive or family == "poisson_gaussian"
        ):
            raise ValueError(f"loss 'l2r' needs additive or poisson_gaussian noise, got '{family}'")
        if self.recorruptor.pg_scale and family != "poisson_gaussian":
            raise ValueError("recorruptor pg_scale is only meaningful for poisson_gaussian noise")
        if self.loss.kind == LossKind.GR2R and not self.noise.is_additive:
            if self.loss.alpha is None:
                raise ValueError(f"loss 'gr2r' on '{family}' noise needs loss.alpha")
        return self


class MetricRecord(BaseModel):
    epoch: int
    lr: float
    loss: float
    psnr: float
    ssim: float
    c_eps: Optional[float] = None
    c_h: Optional[float] = None
    c_delta: Optional[float] = None
    div: Optional[float] = None
    psnr_capped: bool = False

    def to_record(self) -> dict:
        return {column: getattr(self, column) for column in HISTORY_COLUMNS}


class EvaluationRow(BaseModel):
    image: str
    psnr: float
    ssim: float
    psnr_capped: bool = False


class TrainRun(BaseModel):
    """A run configuration together with what training produced."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    history: List[MetricRecord] = Field(default_factory=list)
    optimizer_state: Optional[dict] = None
    checkpoint: Optional[str] = None
    recorruptor_checkpoint: Optional[str] = None
    history_csv: Optional[str] = None


class ImageSet(BaseModel):
    """Clean images with their noisy observations, stacked as (N, 1, H, W)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    names: List[str]
    clean: torch.Tensor
    noisy: torch.Tensor

    @model_validator(mode="after")
    def check_shapes(self) -> "ImageSet":
        if self.clean.shape != self.noisy.shape:
            raise ValueError(
                f"clean shape {tuple(self.clean.shape)} != noisy shape {tuple(self.noisy.shape)}"
            )
        if len(self.names) != self.clean.shape[0]:
            raise ValueError(f"{len(self.names)} names for {self.clean.shape[0]} images")
        return self
