import logging
import math
from typing import Optional

import torch
import torch.nn as nn

from src.models.l2r_models import RecorruptorConfig
from src.services.autodiff.primitives import DTYPE, softplus
from src.services.noise.kernels import circular_filter
from src.services.samplers import RngStream

logger = logging.getLogger(__name__)

# Constants to avoid magic numbers
NORM_EPS = 1e-12
INIT_NOISE = 0.1
PRETRAIN_BATCH = 4096
PRETRAIN_LR = 1e-2
PRETRAIN_TARGET = 1e-3


def inverse_softplus(value: float) -> float:
    return math.log(math.expm1(value))


class MonotoneMLP(nn.Module):
    """Scalar-to-scalar MLP, non-decreasing when its weights pass through softplus.

    Hidden layers use softplus activations, the output layer is linear.
    """

    def __init__(
        self,
        depth: int,
        width: int,
        monotone: bool = True,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        self.monotone = monotone
        sizes = [1] + [width] * (depth - 1) + [1]
        self.raw_weights = nn.ParameterList()
        self.biases = nn.ParameterList()
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            # effective weights start near 1 / fan_in so the initial map is close to identity
            target = 1.0 / fan_in
            center = inverse_softplus(target) if monotone else target
            noise = torch.randn(fan_out, fan_in, generator=generator, dtype=DTYPE)
            self.raw_weights.append(nn.Parameter(center + INIT_NOISE * noise))
            self.biases.append(nn.Parameter(torch.zeros(fan_out, dtype=DTYPE)))

    def effective_weights(self):
        if not self.monotone:
            return list(self.raw_weights)
        return [softplus(raw) for raw in self.raw_weights]

    def forward(self, w: torch.Tensor) -> torch.Tensor:
        shape = w.shape
        z = w.reshape(-1, 1)
        weights = self.effective_weights()
        for i, (weight, bias) in enumerate(zip(weights, self.biases)):
            z = z @ weight.t() + bias
            if i < len(weights) - 1:
                z = softplus(z)
        return z.reshape(shape)


class Recorruptor(nn.Module):
    """Learned recorruption h(w') = k * N(mMLP(w')), optionally scaled by sqrt(y).

    N standardizes with the statistics of the current batch. The kernel k is shared
    across channels and applied with periodic boundaries.
    """

    def __init__(self, cfg: Optional[RecorruptorConfig] = None, seed: int = 0):
        super().__init__()
        self.cfg = cfg or RecorruptorConfig()
        generator = torch.Generator().manual_seed(seed)
        self.mlp = MonotoneMLP(self.cfg.depth, self.cfg.width, self.cfg.monotone, generator)
        size = self.cfg.kernel_size
        kernel = torch.zeros(size, size, dtype=DTYPE)
        kernel[size // 2, size // 2] = self.cfg.init_scale
        self.kernel = nn.Parameter(kernel)

    @property
    def pg_scale(self) -> bool:
        return self.cfg.pg_scale

    def scalar_map(self, w: torch.Tensor) -> torch.Tensor:
        out = self.mlp(w)
        if self.cfg.residual:
            out = out + w
        return out

    @staticmethod
    def normalize(z: torch.Tensor) -> torch.Tensor:
        centered = z - z.mean()
        return centered / torch.sqrt(torch.mean(centered**2) + NORM_EPS)

    def apply_kernel(self, z: torch.Tensor) -> torch.Tensor:
        if self.cfg.kernel_size == 1:
            return z * self.kernel[0, 0]
        return circular_filter(z, self.kernel)

    def forward(self, w: torch.Tensor, y: Optional[torch.Tensor] = None) -> torch.Tensor:
        out = self.apply_kernel(self.normalize(self.scalar_map(w)))
        if self.cfg.pg_scale:
            if y is None:
                raise ValueError("recorruptor: pg_scale requires the measurement y")
            negative = int((y < 0).sum())
            if negative:
                raise ValueError(f"recorruptor: pg_scale with {negative} negative pixels in y")
            out = out * torch.sqrt(y)
        return out


def recorruptor_forward(
    h: Recorruptor, w: torch.Tensor, y: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Evaluate h on standard-normal draws w; y is needed only for pg_scale."""
    return h(w, y)


def identity_pretrain(h: Recorruptor, n_steps: int, rng: RngStream) -> Recorruptor:
    """Fit the scalar map to the identity on fresh standard-normal draws.

    Stops after n_steps or once the batch MSE falls below 1e-3.
    """
    if n_steps <= 0:
        return h
    optimizer = torch.optim.Adam(h.mlp.parameters(), lr=PRETRAIN_LR)
    loss = None
    for step in range(n_steps):
        w = rng.standard_normal((PRETRAIN_BATCH,))
        optimizer.zero_grad()
        loss = torch.mean((h.scalar_map(w) - w) ** 2)
        if float(loss) < PRETRAIN_TARGET:
            logger.info(f"identity pretrain converged at step {step}: mse {float(loss):.3g}")
            return h
        loss.backward()
        optimizer.step()
    logger.info(f"identity pretrain stopped after {n_steps} steps: mse {float(loss):.3g}")
    return h
