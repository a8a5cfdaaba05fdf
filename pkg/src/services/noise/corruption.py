import logging
import math
from typing import Callable, Sequence, Tuple

import numpy as np
import torch
from scipy import special

from src.models.noise_models import DistFamily, DistSpec, NoiseFamily, NoiseModel
from src.services.autodiff.primitives import DTYPE, as_tensor
from src.services.noise.kernels import circular_filter, model_kernel
from src.services.samplers import RngStream, digamma, sample, trigamma

logger = logging.getLogger(__name__)

# Smallest gamma variate fed to the logarithm
GAMMA_FLOOR = np.finfo(np.float64).tiny


def _offending(mask: torch.Tensor) -> int:
    return int(mask.sum())


def check_domain(x: torch.Tensor, model: NoiseModel) -> None:
    """Raise ValueError when x leaves the support the family is defined on."""
    if not torch.isfinite(x).all():
        raise ValueError(f"{model.family.value}: {_offending(~torch.isfinite(x))} non-finite pixels")
    family = model.family
    if family in (NoiseFamily.POISSON, NoiseFamily.GAMMA, NoiseFamily.BINOMIAL):
        bad = _offending(x <= 0)
        if bad:
            raise ValueError(f"{family.value}: {bad} pixels are not strictly positive")
    if family == NoiseFamily.BINOMIAL:
        bad = _offending(x >= 1)
        if bad:
            raise ValueError(f"{family.value}: {bad} pixels are not strictly below 1")
    if family == NoiseFamily.POISSON_GAUSSIAN:
        bad = _offending(x < 0)
        if bad:
            raise ValueError(f"{family.value}: {bad} pixels are negative")


def log_gamma_constants(ell: float, sigma: float) -> Tuple[float, float]:
    """Centering b = psi(ell) - ln(ell) and scale sigma / sqrt(psi_1(ell)).

    With z ~ Gamma(shape ell, rate ell), ln z has mean b and variance psi_1(ell),
    so the scaled noise has exactly the configured standard deviation.
    """
    return digamma(ell) - math.log(ell), sigma / math.sqrt(trigamma(ell))


def sample_noise(model: NoiseModel, shape: Sequence[int], rng: RngStream) -> torch.Tensor:
    """Draw the additive noise epsilon of an additive family."""
    family = model.family
    if family == NoiseFamily.ADDITIVE_GAUSSIAN:
        return model.sigma * rng.standard_normal(shape)
    if family == NoiseFamily.ADDITIVE_LAPLACE:
        return sample(DistSpec(family=DistFamily.LAPLACE, b=model.b), shape, rng)
    if family == NoiseFamily.ADDITIVE_LOG_GAMMA:
        z = sample(
            DistSpec(family=DistFamily.GAMMA, shape=model.ell, scale=1.0 / model.ell),
            shape,
            rng,
        )
        center, scale = log_gamma_constants(model.ell, model.sigma)
        return scale * (torch.log(torch.clamp(z, min=GAMMA_FLOOR)) - center)
    if family == NoiseFamily.CORRELATED_GAUSSIAN:
        return circular_filter(model.sigma * rng.standard_normal(shape), model_kernel(model))
    raise ValueError(f"{family.value}: not an additive noise family")


def corrupt(x, model: NoiseModel, rng: RngStream) -> torch.Tensor:
    """Draw one corrupted observation y ~ p(y | x).

    Args:
        x: Clean image tensor with values in [0, 1]
        model: Corruption law
        rng: Stream the noise is drawn from

    Returns:
        Noisy tensor of the same shape, in image units

    Raises:
        ValueError: x outside the family's domain (reports the pixel count)
    """
    x = as_tensor(x)
    check_domain(x, model)
    family = model.family
    if model.is_additive:
        return x + sample_noise(model, x.shape, rng)

    gen = rng.generator
    values = x.detach().numpy()
    if family == NoiseFamily.POISSON:
        y = model.gamma * gen.poisson(values / model.gamma)
    elif family == NoiseFamily.GAMMA:
        y = gen.gamma(model.ell, values / model.ell)
    elif family == NoiseFamily.BINOMIAL:
        y = gen.binomial(model.n_trials, values) / model.n_trials
    elif family == NoiseFamily.BERNOULLI_MASK:
        y = values * (gen.random(values.shape) < model.p0)
    elif family == NoiseFamily.POISSON_GAUSSIAN:
        counts = gen.poisson(values / model.gamma)
        y = model.gamma * counts + model.sigma * gen.standard_normal(values.shape)
    else:
        raise ValueError(f"corrupt: unsupported family '{family}'")
    return torch.from_numpy(np.asarray(y, dtype=np.float64)).to(DTYPE)


def model_mean_var(model: NoiseModel, x) -> Tuple[torch.Tensor, torch.Tensor]:
    """Closed-form E[y | x] and V[y | x], element-wise."""
    x = as_tensor(x)
    check_domain(x, model)
    family = model.family
    if family == NoiseFamily.ADDITIVE_GAUSSIAN:
        var = torch.full_like(x, model.sigma**2)
    elif family == NoiseFamily.ADDITIVE_LAPLACE:
        var = torch.full_like(x, 2 * model.b**2)
    elif family == NoiseFamily.ADDITIVE_LOG_GAMMA:
        var = torch.full_like(x, model.sigma**2)
    elif family == NoiseFamily.CORRELATED_GAUSSIAN:
        var = torch.full_like(x, model.sigma**2 * float((model_kernel(model) ** 2).sum()))
    elif family == NoiseFamily.POISSON:
        var = model.gamma * x
    elif family == NoiseFamily.GAMMA:
        var = x**2 / model.ell
    elif family == NoiseFamily.BINOMIAL:
        var = x * (1 - x) / model.n_trials
    elif family == NoiseFamily.POISSON_GAUSSIAN:
        var = model.gamma * x + model.sigma**2
    elif family == NoiseFamily.BERNOULLI_MASK:
        return model.p0 * x, model.p0 * (1 - model.p0) * x**2
    else:
        raise ValueError(f"model_mean_var: unsupported family '{family}'")
    return x.clone(), var


def noise_map(model: NoiseModel) -> Callable[[torch.Tensor], torch.Tensor]:
    """Oracle transport g(w) = F^-1(Phi(w)) pushing standard normals to the noise law.

    Raises:
        ValueError: the family is not additive
    """
    family = model.family
    if family == NoiseFamily.ADDITIVE_GAUSSIAN:
        return lambda w: model.sigma * w
    if family == NoiseFamily.CORRELATED_GAUSSIAN:
        kernel = model_kernel(model)
        return lambda w: circular_filter(model.sigma * w, kernel)
    if family == NoiseFamily.ADDITIVE_LAPLACE:

        def laplace_map(w: torch.Tensor) -> torch.Tensor:
            values = w.detach().numpy()
            # F^-1(Phi(w)) = -b sign(w) ln(2 Phi(-|w|))
            tail = math.log(2.0) + special.log_ndtr(-np.abs(values))
            return torch.from_numpy(-model.b * np.sign(values) * tail).to(DTYPE)

        return laplace_map
    if family == NoiseFamily.ADDITIVE_LOG_GAMMA:
        center, scale = log_gamma_constants(model.ell, model.sigma)

        def log_gamma_map(w: torch.Tensor) -> torch.Tensor:
            values = w.detach().numpy()
            lower = special.gammaincinv(model.ell, special.ndtr(values))
            upper = special.gammainccinv(model.ell, special.ndtr(-values))
            z = np.where(values > 0, upper, lower) / model.ell
            z = np.maximum(z, GAMMA_FLOOR)
            return torch.from_numpy(scale * (np.log(z) - center)).to(DTYPE)

        return log_gamma_map
    raise ValueError(f"{family.value}: no oracle noise map for a non-additive family")
