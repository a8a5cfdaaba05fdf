import pytest
import torch

from src.models.noise_models import NoiseModel
from src.services.noise import (
    autocovariance,
    circular_filter,
    default_kernel,
    model_kernel,
    sample_noise,
)


class TestKernels:

    def test_default_kernel_normalized(self):
        """Test that the default kernel sums to one and is symmetric."""
        kernel = default_kernel()
        assert kernel.shape == (3, 3)
        assert float(kernel.sum()) == pytest.approx(1.0)
        assert torch.allclose(kernel, kernel.t())
        assert kernel[1, 1] == kernel.max()

    @pytest.mark.parametrize("size", [0, 2, 4])
    def test_default_kernel_odd_size(self, size):
        """Test that kernel extents must be positive and odd."""
        with pytest.raises(ValueError, match="odd"):
            default_kernel(size)

    def test_model_kernel_prefers_configured(self):
        """Test that a configured kernel overrides the default."""
        model = NoiseModel(family="correlated_gaussian", sigma=0.1, kernel=[[2.0]])
        assert torch.equal(model_kernel(model), torch.tensor([[2.0]], dtype=torch.float64))

    def test_delta_filter_is_identity(self, image):
        """Test that filtering with a delta kernel returns the input."""
        delta = torch.zeros(3, 3, dtype=torch.float64)
        delta[1, 1] = 1.0
        assert torch.allclose(circular_filter(image, delta), image)

    def test_filter_wraps_around(self):
        """Test periodic boundaries: a shift kernel rolls the image."""
        x = torch.arange(16, dtype=torch.float64).reshape(4, 4)
        shift = torch.zeros(3, 3, dtype=torch.float64)
        shift[1, 2] = 1.0

        out = circular_filter(x, shift)

        assert torch.equal(out, torch.roll(x, shifts=-1, dims=1))

    def test_filter_kernel_too_large(self):
        """Test that a kernel larger than the image is rejected."""
        with pytest.raises(ValueError, match="larger than image"):
            circular_filter(torch.zeros(2, 2, dtype=torch.float64), default_kernel())

    def test_correlated_noise_covariance(self, rng):
        """Test per-pixel variance sigma^2 sum k^2 and the lag-one covariance."""
        model = NoiseModel(family="correlated_gaussian", sigma=1.0)
        kernel = default_kernel()

        eps = sample_noise(model, (2000, 16, 16), rng)

        variance = float((eps**2).mean())
        lag = float((eps * torch.roll(eps, shifts=-1, dims=-1)).mean())
        assert variance == pytest.approx(autocovariance(kernel, (0, 0)), rel=0.02)
        assert lag == pytest.approx(autocovariance(kernel, (0, 1)), rel=0.03)
