import logging
from typing import Callable

import torch

from src.services.autodiff.primitives import as_tensor

logger = logging.getLogger(__name__)

# Floor of the relative-error denominator
REL_ERROR_FLOOR = 1e-12
MAX_STEP = 1e-3


def stop_gradient(t: torch.Tensor) -> torch.Tensor:
    """Identity forward, no gradient flows back to the ancestors of t."""
    return t.detach()


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    denom = torch.clamp(
        torch.maximum(analytic.abs(), numeric.abs()), min=REL_ERROR_FLOOR
    )
    if analytic.numel() == 0:
        return 0.0
    return float(((analytic - numeric).abs() / denom).max())


def grad_check(
    f: Callable[[torch.Tensor], torch.Tensor], point, step: float = 1e-6
) -> float:
    """Compare the reverse-mode gradient of f with central differences.

    Args:
        f: Scalar-valued function of one tensor
        point: Where to evaluate the gradient
        step: Finite-difference step in (0, 1e-3]

    Returns:
        Maximum component-wise relative error

    Raises:
        ValueError: step out of range or f not scalar-valued
    """
    if not 0 < step <= MAX_STEP:
        raise ValueError(f"grad_check: step={step} must be in (0, {MAX_STEP}]")
    base = as_tensor(point).detach()

    x = base.clone().requires_grad_(True)
    out = f(x)
    if out.numel() != 1:
        raise ValueError(
            f"grad_check: f must be scalar-valued, got shape {tuple(out.shape)}"
        )
    if out.requires_grad:
        (analytic,) = torch.autograd.grad(out.reshape(()), x, allow_unused=True)
    else:
        analytic = None
    if analytic is None:
        analytic = torch.zeros_like(base)

    numeric = torch.zeros_like(base)
    flat = numeric.view(-1)
    with torch.no_grad():
        for i in range(base.numel()):
            plus = base.clone()
            minus = base.clone()
            plus.view(-1)[i] += step
            minus.view(-1)[i] -= step
            flat[i] = (f(plus).reshape(()) - f(minus).reshape(())) / (2 * step)

    error = relative_error(analytic, numeric)
    logger.debug(f"grad_check over {base.numel()} components: max rel error {error:.3e}")
    return error
