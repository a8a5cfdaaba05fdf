import logging
from typing import Callable, Dict, Sequence

import torch
import torch.nn.functional as F

logger = logging.getLogger(__name__)

DTYPE = torch.float64

# Above this input softplus switches to x + softplus(-x)
SOFTPLUS_THRESHOLD = 20.0


def as_tensor(values, requires_grad: bool = False) -> torch.Tensor:
    """Convert values to a float64 CPU tensor."""
    tensor = torch.as_tensor(values, dtype=DTYPE)
    if requires_grad:
        tensor = tensor.detach().clone().requires_grad_(True)
    return tensor


def _shapes(*tensors: torch.Tensor) -> str:
    return " and ".join(str(tuple(t.shape)) for t in tensors)


def _check_broadcast(op: str, a: torch.Tensor, b: torch.Tensor) -> None:
    try:
        torch.broadcast_shapes(a.shape, b.shape)
    except RuntimeError:
        raise ValueError(f"{op}: incompatible shapes {_shapes(a, b)}")


def _check_positive(op: str, x: torch.Tensor) -> None:
    bad = int((x <= 0).sum())
    if bad:
        raise ValueError(f"{op}: input must be positive, {bad} non-positive entries")


def softplus(x: torch.Tensor) -> torch.Tensor:
    """ln(1 + e^x) with both branches clamped so neither produces inf."""
    high = torch.clamp(x, min=SOFTPLUS_THRESHOLD)
    low = torch.clamp(x, max=SOFTPLUS_THRESHOLD)
    return torch.where(
        x > SOFTPLUS_THRESHOLD,
        high + torch.log1p(torch.exp(-high)),
        torch.log1p(torch.exp(low)),
    )


def add(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_broadcast("add", a, b)
    return a + b


def sub(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_broadcast("sub", a, b)
    return a - b


def mul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_broadcast("mul", a, b)
    return a * b


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.dim() != 2 or b.dim() != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {_shapes(a, b)}")
    return a @ b


def conv2d(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    """Stride-1 convolution with zero padding that preserves the spatial size.

    Args:
        x: Input of shape (N, C, H, W)
        kernel: Weights of shape (O, C, k, k) with odd k

    Returns:
        Output of shape (N, O, H, W)
    """
    if x.dim() != 4 or kernel.dim() != 4 or x.shape[1] != kernel.shape[1]:
        raise ValueError(f"conv2d: incompatible shapes {_shapes(x, kernel)}")
    kh, kw = kernel.shape[-2:]
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"conv2d: kernel extent must be odd, got {(kh, kw)}")
    return F.conv2d(x, kernel, padding=(kh // 2, kw // 2))


def total(x: torch.Tensor) -> torch.Tensor:
    return x.sum()


def mean(x: torch.Tensor) -> torch.Tensor:
    if x.numel() == 0:
        raise ValueError("mean: empty input")
    return x.mean()


def square(x: torch.Tensor) -> torch.Tensor:
    return x * x


def sqrt(x: torch.Tensor) -> torch.Tensor:
    _check_positive("sqrt", x)
    return torch.sqrt(x)


def exp(x: torch.Tensor) -> torch.Tensor:
    return torch.exp(x)


def log(x: torch.Tensor) -> torch.Tensor:
    _check_positive("log", x)
    return torch.log(x)


def relu(x: torch.Tensor) -> torch.Tensor:
    return torch.relu(x)


def transpose(x: torch.Tensor) -> torch.Tensor:
    if x.dim() != 2:
        raise ValueError(f"transpose: expected a matrix, got shape {tuple(x.shape)}")
    return x.t()


def broadcast(x: torch.Tensor, shape: Sequence[int]) -> torch.Tensor:
    try:
        return torch.broadcast_to(x, tuple(shape))
    except RuntimeError:
        raise ValueError(f"broadcast: cannot broadcast {tuple(x.shape)} to {tuple(shape)}")


def slice_rows(x: torch.Tensor, start: int, stop: int) -> torch.Tensor:
    if x.dim() == 0 or not 0 <= start < stop <= x.shape[0]:
        raise ValueError(f"slice: range [{start}, {stop}) invalid for shape {tuple(x.shape)}")
    return x[start:stop]


def concat(*tensors: torch.Tensor) -> torch.Tensor:
    if not tensors:
        raise ValueError("concat: no inputs")
    tail = tensors[0].shape[1:]
    for t in tensors[1:]:
        if t.shape[1:] != tail:
            raise ValueError(f"concat: incompatible shapes {_shapes(tensors[0], t)}")
    return torch.cat(tensors, dim=0)


def dot(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.dim() != 1 or a.shape != b.shape:
        raise ValueError(f"dot: incompatible shapes {_shapes(a, b)}")
    return torch.dot(a, b)


PRIMITIVES: Dict[str, Callable[..., torch.Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "matmul": matmul,
    "conv2d": conv2d,
    "sum": total,
    "mean": mean,
    "square": square,
    "sqrt": sqrt,
    "exp": exp,
    "log": log,
    "softplus": softplus,
    "relu": relu,
    "transpose": transpose,
    "broadcast": broadcast,
    "slice": slice_rows,
    "concat": concat,
    "dot": dot,
}


def apply_primitive(op_id: str, *inputs, **params) -> torch.Tensor:
    """Evaluate a named primitive; autograd records it for the backward pass.

    Args:
        op_id: Key of PRIMITIVES
        *inputs: Tensors (and positional arguments such as slice bounds)
        **params: Extra keyword arguments for the primitive

    Returns:
        The forward value, attached to the graph of its inputs

    Raises:
        ValueError: Unknown op, incompatible shapes, domain violations or a
            non-finite result
    """
    try:
        fn = PRIMITIVES[op_id]
    except KeyError:
        raise ValueError(f"Unknown primitive '{op_id}'")
    out = fn(*inputs, **params)
    if not torch.isfinite(out).all():
        raise ValueError(f"{op_id}: produced non-finite values")
    return out
