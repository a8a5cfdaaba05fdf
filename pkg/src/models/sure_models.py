from typing import List, Optional

import torch
from pydantic import BaseModel, ConfigDict, Field


class SureConfig(BaseModel):
    sigma: Optional[float] = Field(None, gt=0, description="Known Gaussian noise std")
    mc_probes: int = Field(1, ge=1, description="Rademacher probes per divergence")
    fd_step: float = Field(1e-4, gt=0, le=1e-2, description="Forward-difference step")


class UnsureState(BaseModel):
    """Lagrange multiplier (scalar or kernel) ascended during UNSURE training."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    eta: float = 0.0
    kernel: Optional[torch.Tensor] = Field(
        None, description="Learnable kernel k, Sigma = K K^T (correlated variant)"
    )
    step_size: float = Field(1e-3, gt=0, description="Ascent step size")

    def ascend(self, grad) -> None:
        """Take one gradient-ascent step on eta or on the kernel coefficients."""
        if isinstance(grad, torch.Tensor) and grad.dim() > 0:
            if self.kernel is None:
                raise ValueError("kernel ascent requested on a scalar UNSURE state")
            with torch.no_grad():
                self.kernel += self.step_size * grad
        else:
            self.eta += self.step_size * float(grad)


class AkEstimate(BaseModel):
    alpha: float
    estimate: float
    se: float


class AkReport(BaseModel):
    k: int
    y: float
    estimates: List[AkEstimate] = Field(default_factory=list)
    limit: float
