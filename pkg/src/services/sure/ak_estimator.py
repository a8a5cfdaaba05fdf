import logging
from typing import List, Sequence

import torch

from src.models.noise_models import NoiseFamily, NoiseModel
from src.models.splitting_models import SplitConfig
from src.models.sure_models import AkEstimate, AkReport
from src.services.samplers import RngStream, jackknife_mean
from src.services.splitting import binomial_draws, gr2r_pair

logger = logging.getLogger(__name__)

# Constants to avoid magic numbers
MIN_ALPHAS = 2
MAX_ALPHA = 0.5


def _check_alpha_seq(alpha_seq: Sequence[float]) -> None:
    if len(alpha_seq) < MIN_ALPHAS:
        raise ValueError(f"estimate_ak: need at least {MIN_ALPHAS} alphas, got {len(alpha_seq)}")
    for alpha in alpha_seq:
        if not 0 < alpha <= MAX_ALPHA:
            raise ValueError(f"estimate_ak: alpha={alpha} outside (0, {MAX_ALPHA}]")
    for previous, current in zip(alpha_seq, alpha_seq[1:]):
        if current >= previous:
            raise ValueError(
                f"estimate_ak: alpha_seq must be strictly decreasing, got {previous} then {current}"
            )


def effective_alphas(model: NoiseModel, alpha_seq: Sequence[float]) -> List[float]:
    """Split strengths actually realized; binomial splits round n * alpha to whole draws."""
    if model.family != NoiseFamily.BINOMIAL:
        return [float(alpha) for alpha in alpha_seq]
    realized = [binomial_draws(model.n_trials, alpha) / model.n_trials for alpha in alpha_seq]
    if len(set(realized)) != len(realized):
        raise ValueError(
            f"estimate_ak: effective alphas must be distinct, {list(alpha_seq)} realize {realized} "
            f"with n_trials={model.n_trials}"
        )
    return realized


def estimate_ak(
    model: NoiseModel,
    y: float,
    k: int,
    alpha_seq: Sequence[float],
    n_mc: int,
    rng: RngStream,
) -> AkReport:
    """Monte Carlo estimates of a_k(alpha) = E[(y2 - y)(alpha y2)^k | y] along alpha_seq.

    The limit as alpha -> 0 is extrapolated linearly through the last two points.

    Args:
        model: Noise law with a splitting rule for y2 | y
        y: Observed value (image units)
        k: Order of the moment, k >= 0
        alpha_seq: Strictly decreasing split strengths in (0, 0.5]
        n_mc: Replicas of y2 per alpha
        rng: Stream; alpha i uses child stream i

    Raises:
        ValueError: Bad order or alphas, including binomial alphas that round to the same split

    Returns:
        AkReport with per-alpha estimates, jackknife SEs and the extrapolated limit
    """
    if k < 0:
        raise ValueError(f"estimate_ak: order k={k} must be >= 0")
    _check_alpha_seq(alpha_seq)
    effective_alphas(model, alpha_seq)

    observed = torch.full((n_mc,), float(y), dtype=torch.float64)
    estimates = []
    for i, alpha in enumerate(alpha_seq):
        pair = gr2r_pair(observed, model, SplitConfig(alpha=alpha), rng.child(i))
        y2 = pair.y2
        values = (y2 - observed) * (pair.alpha * y2) ** k
        result = jackknife_mean(values.numpy())
        estimates.append(AkEstimate(alpha=pair.alpha, estimate=result.value, se=result.se))
        logger.debug(f"a_{k}(alpha={pair.alpha:.4g}) = {result.value:.6g} +/- {result.se:.2g}")

    last, previous = estimates[-1], estimates[-2]
    slope = (last.estimate - previous.estimate) / (last.alpha - previous.alpha)
    limit = last.estimate - last.alpha * slope
    logger.info(f"a_{k} at y={y}: extrapolated limit {limit:.6g} from {len(estimates)} alphas")
    return AkReport(k=k, y=float(y), estimates=estimates, limit=limit)
