import logging
import math
from typing import Callable, List

import torch
from pydantic import BaseModel, ConfigDict, Field

from src.models.noise_models import NoiseFamily, NoiseModel

logger = logging.getLogger(__name__)

Scalar = Callable[[torch.Tensor], torch.Tensor]


class NefSpec(BaseModel):
    """p(y | x) = h(y) exp(y eta(x) - phi(x)) with y in count units."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: str
    eta: Scalar
    phi: Scalar
    log_h: Scalar
    count_scale: float = Field(1.0, description="y_counts = count_scale * y_image")
    notes: List[str] = Field(default_factory=list)


def nef_components(model: NoiseModel) -> NefSpec:
    """Natural-exponential-family form of a noise model.

    The base measure is the normalizing one, so exp(log_h(y) + y eta - phi)
    sums or integrates to one over y.

    Raises:
        ValueError: the family has no NEF form
    """
    family = model.family
    if family == NoiseFamily.ADDITIVE_GAUSSIAN:
        var = model.sigma**2
        log_norm = math.log(math.sqrt(2 * math.pi) * model.sigma)
        return NefSpec(
            family="gaussian",
            eta=lambda x: x / var,
            phi=lambda x: x**2 / (2 * var),
            log_h=lambda y: -(y**2) / (2 * var) - log_norm,
            notes=["gaussian base measure exp(-y^2/(2 sigma^2)) / (sqrt(2 pi) sigma)"],
        )
    if family == NoiseFamily.POISSON:
        gain = model.gamma
        return NefSpec(
            family="poisson",
            eta=torch.log,
            phi=lambda x: x / gain,
            log_h=lambda k: -k * math.log(gain) - torch.lgamma(k + 1),
            count_scale=1.0 / gain,
        )
    if family == NoiseFamily.GAMMA:
        ell = model.ell
        log_const = ell * math.log(ell) - math.lgamma(ell)
        return NefSpec(
            family="gamma",
            eta=lambda x: -ell / x,
            phi=lambda x: ell * torch.log(x),
            log_h=lambda y: log_const + (ell - 1) * torch.log(y),
        )
    if family == NoiseFamily.BINOMIAL:
        n = model.n_trials
        return NefSpec(
            family="binomial",
            eta=lambda x: torch.log(x / (1 - x)),
            phi=lambda x: -n * torch.log(1 - x),
            log_h=lambda k: (
                math.lgamma(n + 1) - torch.lgamma(k + 1) - torch.lgamma(n - k + 1)
            ),
            count_scale=float(n),
            notes=["binomial phi = -n log(1 - x): sign flipped so that phi is convex"],
        )
    raise ValueError(f"{family.value}: no NEF form")
