import torch

from src.services.autodiff.primitives import DTYPE


def _positive(name: str, x: float) -> torch.Tensor:
    if not x > 0:
        raise ValueError(f"{name}: argument x={x} must be > 0")
    return torch.tensor(float(x), dtype=DTYPE)


def digamma(x: float) -> float:
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    return float(torch.special.digamma(_positive("digamma", x)))


def trigamma(x: float) -> float:
    """psi_1(x) = d^2/dx^2 ln Gamma(x) for x > 0."""
    return float(torch.special.polygamma(1, _positive("trigamma", x)))
