import logging
from typing import List

import numpy as np

from src.models.noise_models import DistSpec
from src.models.report_models import MomentEstimate
from src.services.samplers.distributions import sample
from src.services.samplers.rng_stream import RngStream

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
MAX_ORDER = 8


def jackknife_mean(values: np.ndarray) -> MomentEstimate:
    """Mean of values with its delete-one jackknife standard error."""
    n = values.size
    total = values.sum()
    leave_one_out = (total - values) / (n - 1)
    spread = leave_one_out - leave_one_out.mean()
    se = float(np.sqrt((n - 1) / n * np.sum(spread * spread)))
    return MomentEstimate(order=0, value=float(total / n), se=se)


def moment_report(
    spec: DistSpec, n_samples: int, max_order: int, rng: RngStream
) -> List[MomentEstimate]:
    """Empirical raw moments E[X^k], k = 1..max_order, with jackknife SEs.

    Raises:
        ValueError: n_samples below 100 or max_order outside [1, 8]
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"moment_report: n_samples={n_samples} must be >= {MIN_SAMPLES}")
    if not 1 <= max_order <= MAX_ORDER:
        raise ValueError(f"moment_report: max_order={max_order} must be in [1, {MAX_ORDER}]")

    draws = sample(spec, (n_samples,), rng).numpy()
    estimates = []
    power = np.ones_like(draws)
    for order in range(1, max_order + 1):
        power = power * draws
        estimate = jackknife_mean(power)
        estimates.append(MomentEstimate(order=order, value=estimate.value, se=estimate.se))
    logger.debug(f"moment_report {spec.describe()}: {n_samples} draws, orders 1..{max_order}")
    return estimates
