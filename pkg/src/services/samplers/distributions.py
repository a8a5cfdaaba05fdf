import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import torch

from src.models.noise_models import DistFamily, DistSpec
from src.services.autodiff.primitives import DTYPE
from src.services.samplers.rng_stream import RngStream

logger = logging.getLogger(__name__)


def _to_tensor(values: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.asarray(values, dtype=np.float64)).to(DTYPE)


def sample(spec: DistSpec, shape: Sequence[int], rng: RngStream) -> torch.Tensor:
    """Draw i.i.d. variates from spec; discrete families return integer-valued reals.

    Args:
        spec: Validated distribution description
        shape: Extents of the returned tensor
        rng: Stream the variates are drawn from

    Returns:
        Float64 tensor of the requested shape
    """
    gen = rng.generator
    size = tuple(shape)
    family = spec.family
    if family == DistFamily.NORMAL:
        values = gen.normal(spec.mu, spec.sigma, size)
    elif family == DistFamily.POISSON:
        values = gen.poisson(spec.lam, size)
    elif family == DistFamily.GAMMA:
        values = gen.gamma(spec.shape, spec.scale, size)
    elif family == DistFamily.BETA:
        values = gen.beta(spec.a, spec.b, size)
    elif family == DistFamily.BINOMIAL:
        values = gen.binomial(spec.n, spec.p, size)
    elif family == DistFamily.HYPERGEOMETRIC:
        values = _hypergeometric(gen, spec.population, spec.successes, spec.n, size)
    elif family == DistFamily.BERNOULLI:
        values = gen.random(size) < spec.p
    elif family == DistFamily.LAPLACE:
        values = gen.laplace(spec.mu, spec.b, size)
    elif family == DistFamily.RADEMACHER:
        values = gen.integers(0, 2, size) * 2 - 1
    else:
        raise ValueError(f"sample: unsupported family '{family}'")
    return _to_tensor(values)


def _hypergeometric(gen: np.random.Generator, population, successes, draws, size=None):
    population = np.asarray(population, dtype=np.int64)
    successes = np.asarray(successes, dtype=np.int64)
    draws = np.asarray(draws, dtype=np.int64)
    # numpy rejects an empty population, whose only outcome is zero successes
    safe = population > 0
    if np.all(safe):
        return gen.hypergeometric(successes, population - successes, draws, size)
    shape = size if size is not None else np.broadcast(population, successes, draws).shape
    out = np.zeros(shape, dtype=np.int64)
    mask = np.broadcast_to(safe, shape)
    if mask.any():
        good = np.broadcast_to(successes, shape)[mask]
        total = np.broadcast_to(population, shape)[mask]
        take = np.broadcast_to(draws, shape)[mask]
        out[mask] = gen.hypergeometric(good, total - good, take)
    return out


def binomial_thinning(counts: torch.Tensor, p: float, rng: RngStream) -> torch.Tensor:
    """omega ~ Bin(counts, p) element-wise."""
    arr = counts.detach().cpu().numpy()
    if np.any(arr < 0):
        raise ValueError(f"binomial_thinning: {int((arr < 0).sum())} negative counts")
    if not 0 <= p <= 1:
        raise ValueError(f"binomial_thinning: p={p} violates 0 <= p <= 1")
    return _to_tensor(rng.generator.binomial(np.rint(arr).astype(np.int64), p))


def beta_fractions(a: float, b: float, shape: Sequence[int], rng: RngStream) -> torch.Tensor:
    return sample(DistSpec(family=DistFamily.BETA, a=a, b=b), shape, rng)


def hypergeometric_draws(
    population: int, successes: torch.Tensor, draws: int, rng: RngStream
) -> torch.Tensor:
    """Successes among `draws` items taken without replacement, element-wise in K."""
    good = np.rint(successes.detach().cpu().numpy()).astype(np.int64)
    if np.any(good < 0) or np.any(good > population):
        raise ValueError(
            f"hypergeometric_draws: successes outside [0, {population}] "
            f"at {int(((good < 0) | (good > population)).sum())} entries"
        )
    if not 0 <= draws <= population:
        raise ValueError(f"hypergeometric_draws: draws={draws} violates 0 <= n <= {population}")
    return _to_tensor(_hypergeometric(rng.generator, population, good, draws))


def dist_mean_var(spec: DistSpec) -> Tuple[float, float]:
    """Textbook mean and variance of spec."""
    family = spec.family
    if family == DistFamily.NORMAL:
        return spec.mu, spec.sigma**2
    if family == DistFamily.POISSON:
        return spec.lam, spec.lam
    if family == DistFamily.GAMMA:
        return spec.shape * spec.scale, spec.shape * spec.scale**2
    if family == DistFamily.BETA:
        total = spec.a + spec.b
        return spec.a / total, spec.a * spec.b / (total**2 * (total + 1))
    if family == DistFamily.BINOMIAL:
        return spec.n * spec.p, spec.n * spec.p * (1 - spec.p)
    if family == DistFamily.HYPERGEOMETRIC:
        N, K, n = spec.population, spec.successes, spec.n
        if N == 0:
            return 0.0, 0.0
        mean = n * K / N
        var = n * (K / N) * (1 - K / N) * (N - n) / (N - 1) if N > 1 else 0.0
        return mean, var
    if family == DistFamily.BERNOULLI:
        return spec.p, spec.p * (1 - spec.p)
    if family == DistFamily.LAPLACE:
        return spec.mu, 2 * spec.b**2
    if family == DistFamily.RADEMACHER:
        return 0.0, 1.0
    raise ValueError(f"dist_mean_var: unsupported family '{family}'")


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def dist_raw_moment(spec: DistSpec, order: int) -> Optional[float]:
    """Closed-form E[X^order] for families that admit one, None otherwise."""
    family = spec.family
    if family == DistFamily.NORMAL:
        # E[(mu + sigma Z)^k] with E Z^j = (j-1)!! for even j
        return sum(
            math.comb(order, j)
            * spec.mu ** (order - j)
            * spec.sigma**j
            * _double_factorial(j - 1)
            for j in range(0, order + 1, 2)
        )
    if family == DistFamily.LAPLACE:
        return sum(
            math.comb(order, j) * spec.mu ** (order - j) * spec.b**j * math.factorial(j)
            for j in range(0, order + 1, 2)
        )
    if family == DistFamily.RADEMACHER:
        return 1.0 if order % 2 == 0 else 0.0
    if family == DistFamily.BERNOULLI:
        return spec.p if order > 0 else 1.0
    if family == DistFamily.GAMMA:
        return spec.scale**order * math.exp(
            math.lgamma(spec.shape + order) - math.lgamma(spec.shape)
        )
    return None
