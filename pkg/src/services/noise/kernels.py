from typing import Tuple

import torch
import torch.nn.functional as F

from src.models.noise_models import NoiseModel
from src.services.autodiff.primitives import DTYPE

DEFAULT_KERNEL_SIZE = 3
DEFAULT_KERNEL_STD = 0.5


def default_kernel(size: int = DEFAULT_KERNEL_SIZE, std: float = DEFAULT_KERNEL_STD) -> torch.Tensor:
    """Normalized isotropic Gaussian kernel of odd extent, shape (size, size)."""
    if size % 2 == 0 or size < 1:
        raise ValueError(f"default_kernel: size={size} must be a positive odd number")
    offsets = torch.arange(size, dtype=DTYPE) - size // 2
    profile = torch.exp(-(offsets**2) / (2 * std**2))
    kernel = torch.outer(profile, profile)
    return kernel / kernel.sum()


def model_kernel(model: NoiseModel) -> torch.Tensor:
    if model.kernel is not None:
        return torch.tensor(model.kernel, dtype=DTYPE)
    return default_kernel()


def circular_filter(images: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    """Filter the last two dims of images with kernel under periodic boundaries."""
    if images.dim() < 2:
        raise ValueError(f"circular_filter: need spatial dims, got shape {tuple(images.shape)}")
    size = kernel.shape[-1]
    height, width = images.shape[-2:]
    if size > height or size > width:
        raise ValueError(
            f"circular_filter: kernel {tuple(kernel.shape)} larger than image "
            f"{(height, width)}"
        )
    flat = images.reshape(-1, 1, height, width)
    pad = size // 2
    padded = F.pad(flat, (pad, pad, pad, pad), mode="circular")
    out = F.conv2d(padded, kernel.reshape(1, 1, size, size))
    return out.reshape(images.shape)


def autocovariance(kernel: torch.Tensor, shift: Tuple[int, int] = (0, 1)) -> float:
    """(k * k)(shift) for unit-variance white input, i.e. sum_u k(u) k(u + shift)."""
    dy, dx = shift
    size = kernel.shape[-1]
    total = 0.0
    for i in range(size):
        for j in range(size):
            ii, jj = i + dy, j + dx
            if 0 <= ii < size and 0 <= jj < size:
                total += float(kernel[i, j] * kernel[ii, jj])
    return total
