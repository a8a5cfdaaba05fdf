import logging
from typing import Callable, Optional, Sequence

import torch

from src.models.sure_models import SureConfig
from src.services.samplers import RngStream

logger = logging.getLogger(__name__)

Denoiser = Callable[[torch.Tensor], torch.Tensor]


def draw_probes(shape: Sequence[int], n_probes: int, rng: RngStream) -> torch.Tensor:
    """Rademacher probes of shape (n_probes, *shape)."""
    return rng.rademacher((n_probes, *shape))


def probe_divergence(
    f: Denoiser,
    y: torch.Tensor,
    directions: torch.Tensor,
    weights: torch.Tensor,
    step: float,
    base: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Mean over probes of weights^T (f(y + step * directions) - f(y)) / step.

    A precomputed f(y) may be passed as base.
    """
    if base is None:
        base = f(y)
    total = y.new_zeros(())
    for direction, weight in zip(directions, weights):
        total = total + (weight * (f(y + step * direction) - base)).sum() / step
    return total / directions.shape[0]


def mc_divergence(
    f: Denoiser,
    y: torch.Tensor,
    cfg: SureConfig,
    rng: RngStream,
    probes: Optional[torch.Tensor] = None,
    base: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Hutchinson estimate of div f(y) = sum_i df_i/dy_i with forward differences.

    Args:
        f: Denoiser; gradients flow to its parameters
        y: Input tensor
        cfg: Probe count and finite-difference step
        rng: Stream the Rademacher probes are drawn from
        probes: Shared probes of shape (P, *y.shape), drawn when None
        base: f(y) when the caller already has it

    Returns:
        Scalar tensor, unbiased for div f as the step goes to zero
    """
    if probes is None:
        probes = draw_probes(y.shape, cfg.mc_probes, rng)
    return probe_divergence(f, y, probes, probes, cfg.fd_step, base=base)
