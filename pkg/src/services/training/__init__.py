from src.services.training.denoisers import (
    IdentityDenoiser,
    OracleDenoiser,
    ToyDenoiser,
    build_denoiser,
)
from src.services.training.metrics import psnr, ssim
from src.services.training.optim import adamw_step, build_optimizer, build_scheduler, cosine_lr
from src.services.training.trainer import (
    Trainer,
    build_image_set,
    evaluate,
    load_denoiser,
    run_streams,
    train,
)

__all__ = [
    "adamw_step",
    "build_optimizer",
    "build_scheduler",
    "cosine_lr",
    "psnr",
    "ssim",
    "ToyDenoiser",
    "IdentityDenoiser",
    "OracleDenoiser",
    "build_denoiser",
    "Trainer",
    "train",
    "evaluate",
    "build_image_set",
    "load_denoiser",
    "run_streams",
]
