import logging
from typing import Callable, Dict, Tuple

import torch

from src.models.l2r_models import HObjective, L2RConfig
from src.services.l2r.recorruptor import Recorruptor
from src.services.samplers import RngStream

logger = logging.getLogger(__name__)

Denoiser = Callable[[torch.Tensor], torch.Tensor]


class NonFiniteLossError(RuntimeError):
    """Raised when a training loss evaluates to NaN or infinity."""

    def __init__(self, term: str, value: float, epoch: int = -1):
        self.term = term
        self.value = value
        self.epoch = epoch
        super().__init__(f"non-finite {term} loss ({value}) at epoch {epoch}")


def _recorrupt(h: Recorruptor, y: torch.Tensor, rng: RngStream) -> torch.Tensor:
    w = rng.standard_normal(y.shape)
    return h(w, torch.clamp(y, min=0) if h.pg_scale else None)


def l2r_losses(
    f: Denoiser, h: Recorruptor, y: torch.Tensor, cfg: L2RConfig, rng: RngStream
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Min-max objective L = ||f(y1) - y||^2 / n + c f(y1)^T h(w') / n, y1 = y + tau h(w').

    One fresh w' is drawn per call and both losses come from a single forward pass of f.

    Returns:
        (loss_f, loss_h): loss_f is minimized over f, loss_h = -L over h. With
        use_stop_gradient the h path does not differentiate through f.
    """
    tau = cfg.tau
    hw = _recorrupt(h, y, rng)
    y1 = y + tau * hw
    out = f(y1)
    consistency = torch.mean((out - y) ** 2)
    loss_f = consistency + cfg.correlation_factor * torch.mean(out * hw)

    frozen = out.detach() if cfg.use_stop_gradient else out
    if cfg.h_objective == HObjective.GR2R:
        y2 = y - hw / tau
        loss_h = -torch.mean((frozen - y2) ** 2)
    elif cfg.use_stop_gradient:
        # mse depends on h only through f's input, which the stop-gradient cuts
        loss_h = -(consistency.detach() + cfg.correlation_factor * torch.mean(frozen * hw))
    else:
        loss_h = -loss_f
    return loss_f, loss_h


def _check_finite(loss: torch.Tensor, term: str, epoch: int) -> None:
    if not torch.isfinite(loss):
        logger.error(f"aborting min-max step: {term} loss is {float(loss)} at epoch {epoch}")
        raise NonFiniteLossError(term, float(loss), epoch)


def _assign_grads(params, loss: torch.Tensor, retain_graph: bool) -> None:
    grads = torch.autograd.grad(loss, params, retain_graph=retain_graph, allow_unused=True)
    for param, grad in zip(params, grads):
        param.grad = torch.zeros_like(param) if grad is None else grad


def minmax_step(
    f: torch.nn.Module,
    h: Recorruptor,
    batch: torch.Tensor,
    cfg: L2RConfig,
    optimizers: Tuple[torch.optim.Optimizer, torch.optim.Optimizer],
    rng: RngStream,
    epoch: int = -1,
) -> Dict[str, float]:
    """One descent step on f and one ascent step on h over a batch of noisy images.

    Joint mode evaluates the losses once and steps both players together. Otherwise f
    steps first and the losses are re-evaluated, with a fresh w', before h steps.

    Raises:
        NonFiniteLossError: either loss is NaN or infinite
    """
    optimizer_f, optimizer_h = optimizers
    f_params = [p for p in f.parameters() if p.requires_grad]
    h_params = [p for p in h.parameters() if p.requires_grad]

    loss_f, loss_h = l2r_losses(f, h, batch, cfg, rng)
    _check_finite(loss_f, "f", epoch)
    _check_finite(loss_h, "h", epoch)
    _assign_grads(f_params, loss_f, retain_graph=cfg.joint)
    if cfg.joint:
        _assign_grads(h_params, loss_h, retain_graph=False)
        optimizer_f.step()
        optimizer_h.step()
        return {"loss_f": float(loss_f), "loss_h": float(loss_h)}

    optimizer_f.step()
    _, loss_h = l2r_losses(f, h, batch, cfg, rng)
    _check_finite(loss_h, "h", epoch)
    _assign_grads(h_params, loss_h, retain_graph=False)
    optimizer_h.step()
    return {"loss_f": float(loss_f), "loss_h": float(loss_h)}
