import math

import pytest
import torch
from pydantic import ValidationError

from src.models.noise_models import NoiseFamily, NoiseModel
from src.services.noise import (
    corrupt,
    log_gamma_constants,
    model_mean_var,
    noise_map,
    sample_noise,
)
from src.services.samplers import digamma, jackknife_mean

# Constants to avoid magic numbers
N_DRAWS = 1_000_000


def _mean_within(values: torch.Tensor, target: float, n_se: float = 4.0) -> bool:
    estimate = jackknife_mean(values.numpy())
    return abs(estimate.value - target) <= n_se * estimate.se


class TestNoiseModel:

    def test_missing_parameter(self):
        """Test that each family requires its own parameters."""
        with pytest.raises(ValidationError, match="'ell' is required"):
            NoiseModel(family=NoiseFamily.GAMMA)

    @pytest.mark.parametrize(
        "params",
        [
            {"family": "additive_gaussian", "sigma": -0.1},
            {"family": "binomial", "n_trials": 0},
            {"family": "bernoulli_mask", "p0": 1.0},
            {"family": "correlated_gaussian", "sigma": 0.1, "kernel": [[1.0, 0.0], [0.0, 1.0]]},
        ],
    )
    def test_invalid_parameters(self, params):
        """Test the parameter domains of the noise families."""
        with pytest.raises(ValidationError):
            NoiseModel(**params)

    def test_unknown_field_rejected(self):
        """Test that typos in parameter names are not silently dropped."""
        with pytest.raises(ValidationError):
            NoiseModel(family="poisson", gamma=0.1, gama=0.2)


class TestCorrupt:

    def test_vanishing_gaussian_noise(self, rng, image):
        """Test that additive Gaussian noise with tiny sigma leaves x unchanged."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_GAUSSIAN, sigma=1e-300)
        assert torch.equal(corrupt(image, model, rng), image)

    def test_domain_error_counts_pixels(self, rng, image):
        """Test that non-positive pixels for a Poisson model are counted."""
        x = image.clone()
        x[0, :3] = 0.0
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=0.1)

        with pytest.raises(ValueError, match="3 pixels are not strictly positive"):
            corrupt(x, model, rng)

    def test_binomial_upper_bound(self, rng):
        """Test that binomial rates must stay strictly below one."""
        model = NoiseModel(family=NoiseFamily.BINOMIAL, n_trials=10)
        with pytest.raises(ValueError, match="strictly below 1"):
            corrupt(torch.tensor([0.5, 1.0], dtype=torch.float64), model, rng)

    def test_poisson_scaling(self, rng):
        """Test E[y] = x and Var[y] = gamma x for Poisson noise in image units."""
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=0.1)
        x = torch.full((N_DRAWS,), 0.5, dtype=torch.float64)

        y = corrupt(x, model, rng)

        assert _mean_within(y, 0.5)
        assert _mean_within((y - 0.5) ** 2, 0.05)
        # counts live on the gamma lattice
        assert torch.allclose(y / 0.1, torch.round(y / 0.1))

    def test_bernoulli_mask_values(self, rng, image):
        """Test that masked pixels are either kept or zeroed."""
        model = NoiseModel(family=NoiseFamily.BERNOULLI_MASK, p0=0.7)
        y = corrupt(image, model, rng)
        assert torch.all((y == 0) | (y == image))

    def test_same_stream_same_sample(self, image):
        """Test that corruption is a function of the stream key."""
        from src.services.samplers import RngStream

        model = NoiseModel(family=NoiseFamily.GAMMA, ell=4.0)
        a = corrupt(image, model, RngStream(3, 0))
        b = corrupt(image, model, RngStream(3, 0))
        assert torch.equal(a, b)


class TestLogGamma:

    def test_constants(self):
        """Test centering and scale for ell = 1."""
        center, scale = log_gamma_constants(1.0, 0.1)
        assert center == pytest.approx(digamma(1.0))
        assert scale == pytest.approx(0.1 / math.sqrt(math.pi**2 / 6))

    def test_noise_is_centered_with_target_std(self, rng):
        """Test zero mean and std sigma of log-gamma noise over 1e6 draws."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_LOG_GAMMA, ell=1.0, sigma=0.1)

        eps = sample_noise(model, (N_DRAWS,), rng)

        assert _mean_within(eps, 0.0)
        assert float(eps.std()) == pytest.approx(0.1, rel=0.02)

    def test_rejects_non_additive(self, rng):
        """Test that sample_noise only serves additive families."""
        with pytest.raises(ValueError, match="not an additive noise family"):
            sample_noise(NoiseModel(family="poisson", gamma=0.1), (4,), rng)


class TestModelMeanVar:

    def test_poisson_gaussian(self):
        """Test Var(y) = gamma x + sigma^2."""
        model = NoiseModel(family=NoiseFamily.POISSON_GAUSSIAN, gamma=0.05, sigma=0.05)
        mean, var = model_mean_var(model, [0.4])
        assert float(mean[0]) == pytest.approx(0.4)
        assert float(var[0]) == pytest.approx(0.0225)

    def test_gamma(self):
        """Test Var(y) = x^2 / ell."""
        _, var = model_mean_var(NoiseModel(family="gamma", ell=4.0), [1.0])
        assert float(var[0]) == pytest.approx(0.25)

    def test_laplace(self):
        """Test Var(y) = 2 b^2."""
        model = NoiseModel(family="additive_laplace", b=0.1 / math.sqrt(2))
        _, var = model_mean_var(model, [0.3])
        assert float(var[0]) == pytest.approx(0.01)

    def test_bernoulli_mask_mean(self):
        """Test that the mask scales the mean by p0."""
        mean, var = model_mean_var(NoiseModel(family="bernoulli_mask", p0=0.5), [0.8])
        assert float(mean[0]) == pytest.approx(0.4)
        assert float(var[0]) == pytest.approx(0.16)


class TestNoiseMap:

    def test_gaussian_is_linear(self):
        """Test g(w) = sigma w for Gaussian noise."""
        g = noise_map(NoiseModel(family="additive_gaussian", sigma=0.2))
        w = torch.tensor([-1.0, 0.0, 2.0], dtype=torch.float64)
        assert torch.allclose(g(w), 0.2 * w)

    @pytest.mark.parametrize(
        "model, variance",
        [
            (NoiseModel(family="additive_laplace", b=0.1), 0.02),
            (NoiseModel(family="additive_log_gamma", ell=1.0, sigma=0.1), 0.01),
        ],
    )
    def test_pushforward_matches_law(self, rng, model, variance):
        """Test that g pushes standard normals to a centered law of the right variance."""
        g = noise_map(model)

        eps = g(rng.standard_normal((N_DRAWS,)))

        assert _mean_within(eps, 0.0)
        assert float(eps.var()) == pytest.approx(variance, rel=0.02)

    @pytest.mark.parametrize(
        "model",
        [
            NoiseModel(family="additive_laplace", b=0.1),
            NoiseModel(family="additive_log_gamma", ell=2.0, sigma=0.1),
        ],
    )
    def test_monotone(self, model):
        """Test that the oracle transport is non-decreasing."""
        w = torch.linspace(-6, 6, 241, dtype=torch.float64)
        assert torch.all(torch.diff(noise_map(model)(w)) >= 0)

    def test_non_additive_rejected(self):
        """Test that count families have no oracle map."""
        with pytest.raises(ValueError, match="non-additive"):
            noise_map(NoiseModel(family="gamma", ell=2.0))
