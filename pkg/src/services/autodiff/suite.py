import logging
from typing import Callable, Dict, List, Tuple

import torch

from src.models.report_models import ValidationReport
from src.services.autodiff.gradcheck import grad_check, stop_gradient
from src.services.autodiff.primitives import apply_primitive, as_tensor
from src.services.samplers import RngStream

logger = logging.getLogger(__name__)

# Gradient checks pass below this relative error
GRAD_TOLERANCE = 1e-5
FD_STEP = 1e-6


def _uniform(rng: RngStream, shape, low: float = -2.0, high: float = 2.0) -> torch.Tensor:
    return as_tensor(rng.generator.uniform(low, high, size=shape))


def _weighted(out: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    return (out * weights).sum()


def primitive_cases(rng: RngStream) -> List[Tuple[str, Callable, torch.Tensor]]:
    """One scalar test function per primitive input, with random data in [-2, 2]."""
    a = _uniform(rng, (3, 4))
    b = _uniform(rng, (3, 4))
    m = _uniform(rng, (4, 2))
    image = _uniform(rng, (1, 1, 8, 8))
    kernel = _uniform(rng, (1, 1, 3, 3))
    positive = _uniform(rng, (3, 4), 0.5, 2.0)
    vec = _uniform(rng, (5,))
    w34 = _uniform(rng, (3, 4))
    w32 = _uniform(rng, (3, 2))
    w43 = _uniform(rng, (4, 3))
    w_img = _uniform(rng, (1, 1, 8, 8))
    w_b = _uniform(rng, (2, 3, 4))
    w_slice = _uniform(rng, (2, 4))
    w_cat = _uniform(rng, (6, 4))

    def unary(op: str, weights: torch.Tensor) -> Callable:
        return lambda x: _weighted(apply_primitive(op, x), weights)

    return [
        ("add", lambda x: _weighted(apply_primitive("add", x, b), w34), a),
        ("sub", lambda x: _weighted(apply_primitive("sub", b, x), w34), a),
        ("mul", lambda x: _weighted(apply_primitive("mul", x, b), w34), a),
        ("matmul", lambda x: _weighted(apply_primitive("matmul", x, m), w32), a),
        ("matmul_rhs", lambda x: _weighted(apply_primitive("matmul", a, x), w32), m),
        (
            "conv2d",
            lambda x: _weighted(apply_primitive("conv2d", x, kernel), w_img),
            image,
        ),
        (
            "conv2d_kernel",
            lambda k: _weighted(apply_primitive("conv2d", image, k), w_img),
            kernel,
        ),
        ("sum", lambda x: apply_primitive("sum", x) * 0.7, a),
        ("mean", lambda x: apply_primitive("mean", x), a),
        ("square", unary("square", w34), a),
        ("sqrt", unary("sqrt", w34), positive),
        ("exp", unary("exp", w34), a),
        ("log", unary("log", w34), positive),
        ("softplus", unary("softplus", w34), a),
        ("relu", unary("relu", w34), a),
        ("transpose", unary("transpose", w43), a),
        (
            "broadcast",
            lambda x: _weighted(apply_primitive("broadcast", x, (2, 3, 4)), w_b),
            a,
        ),
        ("slice", lambda x: _weighted(apply_primitive("slice", x, 1, 3), w_slice), a),
        ("concat", lambda x: _weighted(apply_primitive("concat", x, b), w_cat), a),
        ("dot", lambda x: apply_primitive("dot", x, vec.flip(0)), vec),
        (
            "conv2d_softplus_mean",
            lambda x: apply_primitive(
                "mean", apply_primitive("softplus", apply_primitive("conv2d", x, kernel))
            ),
            image,
        ),
    ]


def stop_gradient_blocks() -> float:
    """Gradient of stop_gradient(x) * x at x = 3, which must be 3."""
    x = as_tensor(3.0, requires_grad=True)
    (grad,) = torch.autograd.grad(stop_gradient(x) * x, x)
    return float(grad)


def delta_conv_identity(rng: RngStream) -> float:
    image = _uniform(rng, (2, 1, 9, 7))
    delta = torch.zeros(1, 1, 3, 3, dtype=image.dtype)
    delta[0, 0, 1, 1] = 1.0
    return float((apply_primitive("conv2d", image, delta) - image).abs().max())


def run_primitive_suite(rng: RngStream) -> ValidationReport:
    """Gradient checks of every primitive plus the identity checks of the engine."""
    report = ValidationReport(title="autodiff")
    errors: Dict[str, float] = {}
    for name, fn, point in primitive_cases(rng):
        errors[name] = grad_check(fn, point, FD_STEP)
        report.add(
            f"grad_{name}",
            errors[name],
            threshold=GRAD_TOLERANCE,
            passed=errors[name] < GRAD_TOLERANCE,
        )
    sg = stop_gradient_blocks()
    report.add("stop_gradient_product", sg, threshold=3.0, passed=sg == 3.0)
    identity = delta_conv_identity(rng)
    report.add(
        "conv2d_delta_identity", identity, threshold=1e-12, passed=identity < 1e-12
    )
    worst = max(errors, key=errors.get)
    logger.info(f"Primitive suite: worst gradient '{worst}' rel error {errors[worst]:.2e}")
    return report
