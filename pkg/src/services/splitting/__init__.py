from src.services.splitting.losses import binomial_stationary_point, gr2r_loss
from src.services.splitting.recorruption import (
    additive_pair,
    binomial_draws,
    gr2r_pair,
    multiplicative_pair,
    thinning_pair,
)
from src.services.splitting.validators import (
    check_moment_conditions,
    conditional_law_tv,
    correlation_functional,
    gr2r_supervised_gap,
    moment_match_omega,
    nef_split_validate,
    pair_noise_constant,
    total_variation,
)

__all__ = [
    "gr2r_pair",
    "gr2r_loss",
    "additive_pair",
    "thinning_pair",
    "multiplicative_pair",
    "binomial_draws",
    "binomial_stationary_point",
    "nef_split_validate",
    "conditional_law_tv",
    "check_moment_conditions",
    "correlation_functional",
    "gr2r_supervised_gap",
    "moment_match_omega",
    "pair_noise_constant",
    "total_variation",
]
