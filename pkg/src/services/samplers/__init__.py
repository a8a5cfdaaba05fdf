from src.services.samplers.distributions import (
    beta_fractions,
    binomial_thinning,
    dist_mean_var,
    dist_raw_moment,
    hypergeometric_draws,
    sample,
)
from src.services.samplers.moments import jackknife_mean, moment_report
from src.services.samplers.rng_stream import RngStream
from src.services.samplers.special import digamma, trigamma

__all__ = [
    "RngStream",
    "sample",
    "binomial_thinning",
    "beta_fractions",
    "hypergeometric_draws",
    "dist_mean_var",
    "dist_raw_moment",
    "digamma",
    "trigamma",
    "jackknife_mean",
    "moment_report",
]
