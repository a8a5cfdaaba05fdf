import os

import pytest
import torch

os.environ["ENV_STATE"] = "test"

from src.configs.env_config import config  # noqa: E402
from src.services.samplers import RngStream  # noqa: E402


@pytest.fixture()
def rng() -> RngStream:
    """Seeded stream, fresh for every test."""
    return RngStream(1234, 0)


@pytest.fixture()
def image() -> torch.Tensor:
    """Smooth 16x16 test image with values inside (0, 1)."""
    yy, xx = torch.meshgrid(
        torch.linspace(0, 1, 16, dtype=torch.float64),
        torch.linspace(0, 1, 16, dtype=torch.float64),
        indexing="ij",
    )
    return 0.2 + 0.6 * (0.5 * xx + 0.5 * torch.sin(3 * yy) ** 2)


@pytest.fixture()
def test_config():
    return config
