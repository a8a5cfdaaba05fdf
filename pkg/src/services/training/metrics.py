import logging
import math
from typing import Optional, Tuple

import numpy as np
import torch
from scipy.signal import convolve2d

from src.configs.env_config import config

logger = logging.getLogger(__name__)

# Constants to avoid magic numbers
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 1.0


def _as_array(image) -> np.ndarray:
    if isinstance(image, torch.Tensor):
        image = image.detach().cpu().numpy()
    return np.asarray(image, dtype=np.float64)


def psnr(x, ref, peak: float = 1.0, cap: Optional[float] = None) -> Tuple[float, bool]:
    """10 log10(peak^2 / MSE) in dB.

    Returns:
        (psnr, capped): identical images give the configured cap with capped=True
    """
    x, ref = _as_array(x), _as_array(ref)
    if x.shape != ref.shape:
        raise ValueError(f"psnr: shape {x.shape} != reference shape {ref.shape}")
    cap = config.PSNR_CAP_DB if cap is None else cap
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0:
        return cap, True
    value = 10 * math.log10(peak**2 / mse)
    if value > cap:
        return cap, True
    return value, False


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    yy, xx = np.ogrid[-half : half + 1, -half : half + 1]
    window = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
    return window / window.sum()


def _filter(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    return convolve2d(image, np.rot90(window, 2), mode="valid")


def ssim_2d(x: np.ndarray, ref: np.ndarray) -> float:
    window = gaussian_window()
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise ValueError(f"ssim: image {x.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mu_x = _filter(x, window)
    mu_r = _filter(ref, window)
    var_x = _filter(x * x, window) - mu_x**2
    var_r = _filter(ref * ref, window) - mu_r**2
    cov = _filter(x * ref, window) - mu_x * mu_r
    ssim_map = ((2 * mu_x * mu_r + c1) * (2 * cov + c2)) / (
        (mu_x**2 + mu_r**2 + c1) * (var_x + var_r + c2)
    )
    return float(ssim_map.mean())


def ssim(x, ref) -> float:
    """Mean local SSIM with an 11x11 Gaussian window (std 1.5), K1 0.01, K2 0.03, range 1.

    Leading dims (batch, channel) are averaged over.
    """
    x, ref = _as_array(x), _as_array(ref)
    if x.shape != ref.shape:
        raise ValueError(f"ssim: shape {x.shape} != reference shape {ref.shape}")
    if x.ndim < 2:
        raise ValueError(f"ssim: need a 2-D image, got shape {x.shape}")
    height, width = x.shape[-2:]
    xs = x.reshape(-1, height, width)
    refs = ref.reshape(-1, height, width)
    return float(np.mean([ssim_2d(a, b) for a, b in zip(xs, refs)]))
