import logging

import torch

from src.models.noise_models import NoiseFamily, NoiseModel
from src.models.splitting_models import RecorruptedPair

logger = logging.getLogger(__name__)

# Predictions of likelihood losses are kept this far inside their domain
PREDICTION_FLOOR = 1e-6


def _prepare(prediction: torch.Tensor, unit_interval: bool, clamp: bool, name: str) -> torch.Tensor:
    high = 1 - PREDICTION_FLOOR if unit_interval else None
    if clamp:
        return torch.clamp(prediction, min=PREDICTION_FLOOR, max=high)
    outside = prediction <= 0
    if unit_interval:
        outside = outside | (prediction >= 1)
    if int(outside.sum()):
        raise ValueError(
            f"gr2r_loss ({name}): {int(outside.sum())} predictions outside the loss domain"
        )
    return prediction


def gr2r_loss(
    prediction: torch.Tensor,
    pair: RecorruptedPair,
    model: NoiseModel,
    clamp: bool = True,
) -> torch.Tensor:
    """Pixel-mean recorruption loss between f(y1) and the pair's target y2.

    Args:
        prediction: Denoiser output f(y1), same shape as the pair
        pair: Recorrupted pair from gr2r_pair
        model: Noise law, selects the family's loss
        clamp: Clamp likelihood-loss predictions into their domain; when False,
            predictions outside the domain raise

    Returns:
        Scalar loss, differentiable w.r.t. prediction

    Raises:
        ValueError: NaN predictions, shape mismatch or domain violation
    """
    if prediction.shape != pair.y2.shape:
        raise ValueError(
            f"gr2r_loss: prediction shape {tuple(prediction.shape)} != pair shape "
            f"{tuple(pair.y2.shape)}"
        )
    nan = int(torch.isnan(prediction).sum())
    if nan:
        raise ValueError(f"gr2r_loss: {nan} NaN predictions")

    family = model.family
    y2 = pair.y2
    if model.is_additive:
        return torch.mean((prediction - y2) ** 2)
    if family == NoiseFamily.POISSON:
        f = _prepare(prediction, False, clamp, family.value)
        # gamma * (-y2_counts log f + f / gamma), with y2 in image units
        return torch.mean(-y2 * torch.log(f) + f)
    if family == NoiseFamily.GAMMA:
        f = _prepare(prediction, False, clamp, family.value)
        return torch.mean(torch.log(f) + y2 / f)
    if family == NoiseFamily.BINOMIAL:
        f = _prepare(prediction, True, clamp, family.value)
        n = pair.n_trials or model.n_trials
        counts = y2 * n
        return torch.mean(-counts * torch.log(f) + (counts - n) * torch.log(1 - f))
    if family in (NoiseFamily.BERNOULLI_MASK, NoiseFamily.POISSON_GAUSSIAN):
        residual = prediction - y2
        if pair.weight is not None:
            residual = pair.weight * residual
        return torch.mean(residual**2)
    raise ValueError(f"{family.value}: no recorruption loss")


def binomial_stationary_point(y2_counts: torch.Tensor, n_trials: int) -> torch.Tensor:
    """Minimizer f* = y2_counts / n of the binomial loss as printed, per pixel."""
    return y2_counts / n_trials
