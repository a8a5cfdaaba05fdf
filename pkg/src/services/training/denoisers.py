import logging

import torch
import torch.nn as nn

from src.models.noise_models import NoiseFamily, NoiseModel
from src.models.training_models import DenoiserKind, DenoiserSection, HeadKind
from src.services.autodiff.primitives import DTYPE

logger = logging.getLogger(__name__)

# Sigmoid-head inputs are clamped this far inside (0, 1) before the logit
LOGIT_EPS = 1e-4


class ToyDenoiser(nn.Module):
    """Small residual CNN: conv-relu stacks with a linear or sigmoid output head.

    The last convolution starts at zero so the untrained network is the identity.
    """

    def __init__(self, channels: int = 16, layers: int = 3, sigmoid_head: bool = False):
        super().__init__()
        self.sigmoid_head = sigmoid_head
        convs = [nn.Conv2d(1, channels, 3, padding=1)]
        convs += [nn.Conv2d(channels, channels, 3, padding=1) for _ in range(layers - 2)]
        convs.append(nn.Conv2d(channels, 1, 3, padding=1))
        self.convs = nn.ModuleList(convs)
        nn.init.zeros_(self.convs[-1].weight)
        nn.init.zeros_(self.convs[-1].bias)
        self.to(DTYPE)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        z = y
        for conv in self.convs[:-1]:
            z = torch.relu(conv(z))
        residual = self.convs[-1](z)
        if self.sigmoid_head:
            return torch.sigmoid(torch.logit(torch.clamp(y, LOGIT_EPS, 1 - LOGIT_EPS)) + residual)
        return y + residual


class IdentityDenoiser(nn.Module):
    def forward(self, y: torch.Tensor) -> torch.Tensor:
        return y


class OracleDenoiser(nn.Module):
    """Returns the clean images regardless of the input (evaluation hook)."""

    def __init__(self, clean: torch.Tensor):
        super().__init__()
        self.register_buffer("clean", clean.to(DTYPE))

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        if y.shape != self.clean.shape:
            raise ValueError(
                f"oracle denoiser: input {tuple(y.shape)} != clean {tuple(self.clean.shape)}"
            )
        return self.clean


def uses_sigmoid_head(section: DenoiserSection, noise: NoiseModel) -> bool:
    if section.head == HeadKind.AUTO:
        return noise.family == NoiseFamily.BINOMIAL
    return section.head == HeadKind.SIGMOID


def build_denoiser(section: DenoiserSection, noise: NoiseModel, seed: int = 0) -> nn.Module:
    """Instantiate the configured denoiser with parameters drawn from seed."""
    if section.kind == DenoiserKind.IDENTITY:
        return IdentityDenoiser()
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        model = ToyDenoiser(section.channels, section.layers, uses_sigmoid_head(section, noise))
    logger.debug(
        f"toy denoiser: {section.layers} layers, {section.channels} channels, "
        f"{'sigmoid' if model.sigmoid_head else 'linear'} head"
    )
    return model
