import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import torch

from src.models.training_models import Schedule

logger = logging.getLogger(__name__)

BETAS = (0.9, 0.999)
EPS = 1e-8
WEIGHT_DECAY = 0.01


def build_optimizer(
    params: Iterable[torch.nn.Parameter], lr: float, weight_decay: float = WEIGHT_DECAY
) -> torch.optim.AdamW:
    """AdamW with decoupled weight decay, betas (0.9, 0.999) and eps 1e-8."""
    return torch.optim.AdamW(params, lr=lr, betas=BETAS, eps=EPS, weight_decay=weight_decay)


def build_scheduler(
    optimizer: torch.optim.Optimizer, schedule: Schedule
) -> torch.optim.lr_scheduler.CosineAnnealingLR:
    return torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=schedule.total_steps, eta_min=schedule.lr_end
    )


def adamw_step(
    optimizer: torch.optim.Optimizer,
    named_params: Optional[Sequence[Tuple[str, torch.nn.Parameter]]] = None,
) -> None:
    """Validate the accumulated gradients, then take one optimizer step.

    Raises:
        ValueError: a gradient holds NaN; the message names the parameter
    """
    if named_params is None:
        named_params = [
            (f"group{g}.param{i}", p)
            for g, group in enumerate(optimizer.param_groups)
            for i, p in enumerate(group["params"])
        ]
    for name, param in named_params:
        if param.grad is not None and torch.isnan(param.grad).any():
            bad = int(torch.isnan(param.grad).sum())
            raise ValueError(f"adamw_step: NaN gradient in parameter '{name}' ({bad} entries)")
    optimizer.step()


def cosine_lr(schedule: Schedule, t: float) -> float:
    """lr_end + (lr_start - lr_end)(1 + cos(pi t / total)) / 2."""
    if not 0 <= t <= schedule.total_steps:
        raise ValueError(f"cosine_lr: t={t} outside [0, {schedule.total_steps}]")
    progress = math.pi * t / schedule.total_steps
    return schedule.lr_end + 0.5 * (schedule.lr_start - schedule.lr_end) * (1 + math.cos(progress))
