import logging
from typing import Optional, Tuple

import torch

from src.models.noise_models import NoiseFamily, NoiseModel
from src.models.splitting_models import PgWeight, RecorruptedPair, SplitConfig
from src.services.autodiff.primitives import as_tensor
from src.services.noise import sample_noise
from src.services.samplers import (
    RngStream,
    beta_fractions,
    binomial_thinning,
    hypergeometric_draws,
    sample,
)

logger = logging.getLogger(__name__)

# Count-domain inputs may deviate from integers by float round-off only
COUNT_TOLERANCE = 1e-6
# Lower bound on the inverse-variance denominator of the PG weight
PG_VARIANCE_FLOOR = 1e-12


def additive_pair(y: torch.Tensor, omega: torch.Tensor, tau: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """y1 = y + tau * omega, y2 = y - omega / tau."""
    return y + tau * omega, y - omega / tau


def thinning_pair(
    counts: torch.Tensor, omega: torch.Tensor, alpha: float
) -> Tuple[torch.Tensor, torch.Tensor]:
    """y1 = (counts - omega) / (1 - alpha), y2 = omega / alpha, in count units."""
    return (counts - omega) / (1 - alpha), omega / alpha


def multiplicative_pair(
    y: torch.Tensor, omega: torch.Tensor, alpha: float
) -> Tuple[torch.Tensor, torch.Tensor]:
    """y1 = y (1 - omega) / (1 - alpha), y2 = y omega / alpha."""
    return y * (1 - omega) / (1 - alpha), y * omega / alpha


def to_counts(y: torch.Tensor, scale: float, family: str) -> torch.Tensor:
    counts = y * scale
    rounded = torch.round(counts)
    negative = int((rounded < 0).sum())
    if negative:
        raise ValueError(f"{family}: {negative} negative counts")
    off = int(((counts - rounded).abs() > COUNT_TOLERANCE).sum())
    if off:
        raise ValueError(f"{family}: {off} pixels are not integer-valued in count units")
    return rounded


def binomial_draws(n_trials: int, alpha: float) -> int:
    """Items drawn by the hypergeometric split: round-half-to-even of n * alpha."""
    draws = round(n_trials * alpha)
    if not 0 < draws < n_trials:
        raise ValueError(
            f"binomial: n_trials * alpha = {n_trials * alpha} rounds to {draws}, "
            f"need 0 < draws < {n_trials}"
        )
    return draws


def gr2r_pair(
    y,
    model: NoiseModel,
    cfg: SplitConfig,
    rng: RngStream,
    omega: Optional[torch.Tensor] = None,
) -> RecorruptedPair:
    """Split one noisy observation into a recorrupted pair (y1, y2).

    Args:
        y: Noisy tensor distributed as `model` (image units)
        model: Noise law that produced y
        cfg: Split strength and auxiliary law
        rng: Stream for the auxiliary draws
        omega: Pre-drawn auxiliary variable, drawn from rng when None

    Returns:
        RecorruptedPair in image units

    Raises:
        ValueError: alpha missing, negative or non-integer counts, or a
            family without a splitting rule
    """
    y = as_tensor(y)
    family = model.family

    if model.is_additive:
        tau = cfg.resolved_tau()
        if omega is None:
            omega = sample(cfg.aux, y.shape, rng) if cfg.aux else sample_noise(model, y.shape, rng)
        y1, y2 = additive_pair(y, omega, tau)
        return RecorruptedPair(y1=y1, y2=y2, tau=tau, alpha=cfg.alpha, family=family)

    if family == NoiseFamily.POISSON:
        alpha = cfg.resolved_alpha()
        counts = to_counts(y, 1.0 / model.gamma, family.value)
        if omega is None:
            omega = binomial_thinning(counts, alpha, rng)
        y1, y2 = thinning_pair(counts, omega, alpha)
        return RecorruptedPair(
            y1=model.gamma * y1, y2=model.gamma * y2, alpha=alpha, family=family
        )

    if family == NoiseFamily.GAMMA:
        alpha = cfg.resolved_alpha()
        if omega is None:
            omega = beta_fractions(model.ell * alpha, model.ell * (1 - alpha), y.shape, rng)
        y1, y2 = multiplicative_pair(y, omega, alpha)
        return RecorruptedPair(y1=y1, y2=y2, alpha=alpha, family=family)

    if family == NoiseFamily.BINOMIAL:
        n = model.n_trials
        draws = binomial_draws(n, cfg.resolved_alpha())
        alpha = draws / n
        if alpha != cfg.alpha:
            logger.info(
                f"binomial split: HypGeo(population={n}, successes=y, draws={draws}), "
                f"effective alpha {alpha:.6g} for requested {cfg.alpha}"
            )
        counts = to_counts(y, float(n), family.value)
        if omega is None:
            omega = hypergeometric_draws(n, counts, draws, rng)
        y1, y2 = thinning_pair(counts, omega, alpha)
        return RecorruptedPair(y1=y1 / n, y2=y2 / n, alpha=alpha, family=family, n_trials=n)

    if family == NoiseFamily.BERNOULLI_MASK:
        alpha = cfg.resolved_alpha()
        if omega is None:
            omega = (rng.generator.random(tuple(y.shape)) < alpha)
            omega = torch.from_numpy(omega).to(y.dtype)
        y2 = y * (1 - omega) / (1 - alpha)
        weight = (y2 > 0).to(y.dtype)
        return RecorruptedPair(y1=y.clone(), y2=y2, weight=weight, alpha=alpha, family=family)

    if family == NoiseFamily.POISSON_GAUSSIAN:
        p = cfg.resolved_alpha()
        tau = cfg.tau if cfg.tau is not None else 1.0
        counts = torch.clamp(torch.round(y / model.gamma), min=0)
        if omega is None:
            thinned = binomial_thinning(counts, p, rng)
            gaussian = model.sigma * rng.standard_normal(y.shape)
        else:
            thinned, gaussian = omega
        y1 = model.gamma * (counts - thinned) / (1 - p) + tau * gaussian
        y2 = model.gamma * thinned / p - gaussian / tau
        variance = model.gamma * y2 + (1 + 1 / tau**2) * model.sigma**2
        if cfg.pg_weight == PgWeight.AS_PRINTED:
            weight = variance
        else:
            weight = torch.rsqrt(torch.clamp(variance, min=PG_VARIANCE_FLOOR))
        return RecorruptedPair(y1=y1, y2=y2, weight=weight, alpha=p, tau=tau, family=family)

    raise ValueError(f"{family.value}: no recorruption rule")
