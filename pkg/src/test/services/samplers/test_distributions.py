import math

import numpy as np
import pytest
import torch
from pydantic import ValidationError

from src.models.noise_models import DistFamily, DistSpec
from src.services.samplers import (
    RngStream,
    binomial_thinning,
    digamma,
    dist_mean_var,
    dist_raw_moment,
    hypergeometric_draws,
    jackknife_mean,
    moment_report,
    sample,
    trigamma,
)


class TestSample:

    def test_degenerate_binomial(self, rng):
        """Test that binomial(n=5, p=0) only yields zeros."""
        spec = DistSpec(family=DistFamily.BINOMIAL, n=5, p=0.0)
        assert torch.all(sample(spec, (1000,), rng) == 0)

    def test_all_success_hypergeometric(self, rng):
        """Test that hypergeometric(N=10, K=10, n=4) always draws 4."""
        spec = DistSpec(family=DistFamily.HYPERGEOMETRIC, population=10, successes=10, n=4)
        assert torch.all(sample(spec, (500,), rng) == 4)

    def test_shape_and_dtype(self, rng):
        """Test that variates come back as float64 in the requested shape."""
        spec = DistSpec(family=DistFamily.GAMMA, shape=2.0, scale=0.5)
        out = sample(spec, (3, 4), rng)
        assert out.shape == (3, 4)
        assert out.dtype == torch.float64

    def test_gamma_mean(self, rng):
        """Test the empirical mean of a gamma law against shape * scale."""
        spec = DistSpec(family=DistFamily.GAMMA, shape=3.0, scale=0.5)
        draws = sample(spec, (200_000,), rng)
        assert float(draws.mean()) == pytest.approx(1.5, abs=0.01)

    @pytest.mark.parametrize(
        "params, name",
        [
            ({"family": "normal", "sigma": 0.0}, "sigma"),
            ({"family": "poisson", "lam": -1.0}, "lam"),
            ({"family": "beta", "a": 1.0, "b": 0.0}, "b"),
            ({"family": "binomial", "n": 4, "p": 1.5}, "p"),
            ({"family": "hypergeometric", "population": 5, "successes": 6, "n": 2}, "successes"),
        ],
    )
    def test_domain_errors_name_parameter(self, params, name):
        """Test that invalid parameters fail naming the parameter."""
        with pytest.raises(ValidationError, match=f"parameter {name}="):
            DistSpec(**params)

    def test_missing_parameter(self):
        """Test that a family's required parameters must be present."""
        with pytest.raises(ValidationError, match="'lam' is required"):
            DistSpec(family=DistFamily.POISSON)


class TestAuxiliaryDraws:

    def test_binomial_thinning_bounds(self, rng):
        """Test that thinned counts never exceed the input counts."""
        counts = torch.tensor([0.0, 1.0, 5.0, 40.0], dtype=torch.float64)
        omega = binomial_thinning(counts.repeat(500), 0.3, rng)
        assert torch.all(omega >= 0)
        assert torch.all(omega <= counts.repeat(500))

    def test_binomial_thinning_rejects_negative_counts(self, rng):
        """Test that negative counts are a domain error."""
        with pytest.raises(ValueError, match="negative counts"):
            binomial_thinning(torch.tensor([-1.0, 2.0]), 0.5, rng)

    def test_hypergeometric_per_element(self, rng):
        """Test element-wise successes including the empty and full cases."""
        successes = torch.tensor([0.0, 10.0, 3.0], dtype=torch.float64)
        out = hypergeometric_draws(10, successes, 4, rng)
        assert out[0] == 0
        assert out[1] == 4
        assert 0 <= out[2] <= 3

    def test_hypergeometric_rejects_excess_successes(self, rng):
        """Test that K must lie in [0, N]."""
        with pytest.raises(ValueError, match="successes outside"):
            hypergeometric_draws(4, torch.tensor([5.0]), 2, rng)


class TestClosedForms:

    def test_digamma_at_one(self):
        """Test psi(1) = -Euler-Mascheroni."""
        assert digamma(1.0) == pytest.approx(-0.5772156649, abs=1e-10)

    def test_trigamma_at_one(self):
        """Test psi_1(1) = pi^2 / 6."""
        assert trigamma(1.0) == pytest.approx(math.pi**2 / 6, abs=1e-10)

    @pytest.mark.parametrize("x", [0.5, 2.0, 7.0])
    def test_digamma_recurrence(self, x):
        """Test psi(x + 1) - psi(x) = 1 / x."""
        assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, rel=1e-12)

    @pytest.mark.parametrize("fn", [digamma, trigamma])
    def test_non_positive_argument(self, fn):
        """Test that x <= 0 is a domain error."""
        with pytest.raises(ValueError, match="must be > 0"):
            fn(0.0)

    def test_laplace_fourth_moment(self):
        """Test E X^4 = 24 b^4 for a centered Laplace law."""
        spec = DistSpec(family=DistFamily.LAPLACE, b=1 / math.sqrt(2))
        assert dist_raw_moment(spec, 4) == pytest.approx(6.0)

    def test_normal_fourth_moment(self):
        """Test E X^4 = 3 sigma^4 for a centered Gaussian."""
        spec = DistSpec(family=DistFamily.NORMAL, sigma=0.1)
        assert dist_raw_moment(spec, 4) == pytest.approx(3e-4)

    def test_hypergeometric_mean_var(self):
        """Test the finite-population variance correction."""
        spec = DistSpec(family=DistFamily.HYPERGEOMETRIC, population=10, successes=4, n=5)
        mean, var = dist_mean_var(spec)
        assert mean == pytest.approx(2.0)
        assert var == pytest.approx(5 * 0.4 * 0.6 * 5 / 9)

    def test_rademacher_mean_var(self):
        """Test the unit-variance symmetric sign law."""
        assert dist_mean_var(DistSpec(family=DistFamily.RADEMACHER)) == (0.0, 1.0)

    def test_unknown_family_mean_var(self):
        """Test that an unsupported family raises instead of defaulting."""
        spec = DistSpec.model_construct(family="cauchy")
        with pytest.raises(ValueError, match="unsupported family 'cauchy'"):
            dist_mean_var(spec)

    def test_poisson_has_no_raw_moment(self):
        """Test that families without a closed form return None."""
        assert dist_raw_moment(DistSpec(family=DistFamily.POISSON, lam=2.0), 3) is None


class TestMomentReport:

    def test_unit_normal_second_moment(self, rng):
        """Test E X^2 of N(0, 1) within 4 standard errors."""
        spec = DistSpec(family=DistFamily.NORMAL, sigma=1.0)

        moments = moment_report(spec, 100_000, 2, rng)

        second = moments[1]
        assert second.order == 2
        assert abs(second.value - 1.0) < 4 * second.se

    def test_laplace_fourth_moment(self, rng):
        """Test E X^4 = 24 b^4 = 6 for unit-variance Laplace within 4 standard errors."""
        spec = DistSpec(family=DistFamily.LAPLACE, b=1 / math.sqrt(2))

        fourth = moment_report(spec, 400_000, 4, rng)[3]

        assert abs(fourth.value - 6.0) < 4 * fourth.se

    def test_rademacher_even_orders_exact(self, rng):
        """Test that even moments of +-1 variates are exactly one."""
        spec = DistSpec(family=DistFamily.RADEMACHER)
        moments = moment_report(spec, 1000, 6, rng)
        assert [m.value for m in moments if m.order % 2 == 0] == [1.0, 1.0, 1.0]
        assert all(m.se == 0.0 for m in moments if m.order % 2 == 0)

    @pytest.mark.parametrize("n_samples, max_order", [(99, 2), (1000, 0), (1000, 9)])
    def test_argument_checks(self, rng, n_samples, max_order):
        """Test the sample-size and order bounds."""
        spec = DistSpec(family=DistFamily.NORMAL, sigma=1.0)
        with pytest.raises(ValueError, match="moment_report"):
            moment_report(spec, n_samples, max_order, rng)

    def test_jackknife_of_constant(self):
        """Test that a constant sample has zero jackknife error."""
        estimate = jackknife_mean(np.full(50, 2.5))
        assert estimate.value == 2.5
        assert estimate.se == pytest.approx(0.0, abs=1e-15)
