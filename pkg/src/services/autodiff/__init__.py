from src.services.autodiff.gradcheck import grad_check, relative_error, stop_gradient
from src.services.autodiff.primitives import (
    DTYPE,
    PRIMITIVES,
    apply_primitive,
    as_tensor,
    conv2d,
    softplus,
)

__all__ = [
    "DTYPE",
    "PRIMITIVES",
    "apply_primitive",
    "as_tensor",
    "conv2d",
    "softplus",
    "grad_check",
    "relative_error",
    "stop_gradient",
]
