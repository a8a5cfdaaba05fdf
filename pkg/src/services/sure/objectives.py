import logging
from typing import Tuple

import torch

from src.models.sure_models import SureConfig, UnsureState
from src.services.autodiff.primitives import conv2d
from src.services.samplers import RngStream
from src.services.sure.divergence import Denoiser, draw_probes, mc_divergence, probe_divergence

logger = logging.getLogger(__name__)


def _mse(f_y: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    return torch.mean((f_y - y) ** 2)


def sure_loss(f: Denoiser, y: torch.Tensor, cfg: SureConfig, rng: RngStream) -> torch.Tensor:
    """||f(y) - y||^2 / n + 2 sigma^2 div f(y) / n for known Gaussian noise."""
    if cfg.sigma is None:
        raise ValueError("sure_loss: SureConfig.sigma is required")
    f_y = f(y)
    divergence = mc_divergence(f, y, cfg, rng, base=f_y)
    return _mse(f_y, y) + 2 * cfg.sigma**2 * divergence / y.numel()


def unsure_objective(
    f: Denoiser, y: torch.Tensor, state: UnsureState, cfg: SureConfig, rng: RngStream
) -> Tuple[torch.Tensor, float]:
    """Lagrangian of the zero-expected-divergence constraint.

    Returns:
        (loss minimized over f, gradient 2 div / n for the ascent on eta)
    """
    f_y = f(y)
    divergence = mc_divergence(f, y, cfg, rng, base=f_y)
    n = y.numel()
    loss = _mse(f_y, y) + 2 * state.eta * divergence / n
    return loss, float(2 * divergence.detach() / n)


def filter_images(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    """Zero-padded convolution of every (H, W) slice of x with a 2-D kernel."""
    height, width = x.shape[-2:]
    if kernel.shape[-1] > width or kernel.shape[-2] > height:
        raise ValueError(
            f"kernel {tuple(kernel.shape)} larger than image {(height, width)}"
        )
    flat = x.reshape(-1, 1, height, width)
    out = conv2d(flat, kernel.reshape(1, 1, *kernel.shape[-2:]))
    return out.reshape(x.shape)


def filter_matrix(kernel: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Dense matrix K of filter_images on (height, width) images, row-major pixels."""
    n = height * width
    basis = torch.eye(n, dtype=kernel.dtype).reshape(n, height, width)
    return filter_images(basis, kernel).reshape(n, n).t()


def correlated_unsure_objective(
    f: Denoiser, y: torch.Tensor, state: UnsureState, cfg: SureConfig, rng: RngStream
) -> Tuple[torch.Tensor, torch.Tensor]:
    """UNSURE with the Sigma-weighted divergence tr(Sigma grad f), Sigma = K K^T.

    Probes are filtered, u = k * v, and the estimator
    u^T (f(y + delta u) - f(y)) / delta has mean tr(K^T J K) = tr(Sigma J).

    Returns:
        (loss minimized over f, ascent gradient w.r.t. the kernel coefficients)
    """
    if state.kernel is None:
        raise ValueError("correlated_unsure_objective: UnsureState.kernel is required")
    if y.dim() < 2:
        raise ValueError(f"correlated_unsure_objective: need images, got shape {tuple(y.shape)}")
    kernel = state.kernel.detach().clone().requires_grad_(True)
    probes = draw_probes(y.shape, cfg.mc_probes, rng)
    directions = filter_images(probes, kernel)
    f_y = f(y)
    divergence = probe_divergence(f, y, directions, directions, cfg.fd_step, base=f_y)
    term = 2 * divergence / y.numel()
    loss = _mse(f_y, y) + term
    (ascent,) = torch.autograd.grad(term, kernel, retain_graph=True)
    return loss, ascent
