from src.services.noise.corruption import (
    check_domain,
    corrupt,
    log_gamma_constants,
    model_mean_var,
    noise_map,
    sample_noise,
)
from src.services.noise.kernels import (
    autocovariance,
    circular_filter,
    default_kernel,
    model_kernel,
)
from src.services.noise.nef import NefSpec, nef_components

__all__ = [
    "corrupt",
    "check_domain",
    "sample_noise",
    "model_mean_var",
    "noise_map",
    "log_gamma_constants",
    "default_kernel",
    "model_kernel",
    "circular_filter",
    "autocovariance",
    "NefSpec",
    "nef_components",
]
