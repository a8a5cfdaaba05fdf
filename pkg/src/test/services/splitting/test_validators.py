import math

import pytest
import torch

from src.models.noise_models import DistFamily, DistSpec, NoiseFamily, NoiseModel
from src.models.splitting_models import SplitConfig
from src.services.splitting import validators
from src.services.splitting import (
    check_moment_conditions,
    conditional_law_tv,
    correlation_functional,
    gr2r_supervised_gap,
    moment_match_omega,
    nef_split_validate,
    pair_noise_constant,
    total_variation,
)

# Constants to avoid magic numbers
N_VALIDATION = 1_000_000
N_MIN = 100_000


def _normal(sigma: float) -> DistSpec:
    return DistSpec(family=DistFamily.NORMAL, sigma=sigma)


def _laplace(variance: float) -> DistSpec:
    return DistSpec(family=DistFamily.LAPLACE, b=math.sqrt(variance / 2))


class TestNefSplitValidate:

    def test_gaussian_variance_ratios(self, rng):
        """Test variance ratios 2.0 / 2.0 and no correlation at alpha = 0.5."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_GAUSSIAN, sigma=0.1)

        report = nef_split_validate(model, [0.5], 0.5, N_VALIDATION, rng)

        assert report.passed
        assert report.row("x=0.5 var_ratio_y1").value == pytest.approx(2.0, rel=0.02)
        assert report.row("x=0.5 var_ratio_y2").value == pytest.approx(2.0, rel=0.02)
        assert abs(report.row("x=0.5 corr_y1_y2").value) < 0.01

    def test_poisson_aux_law(self, rng):
        """Test that z2 | y follows Bin(y, alpha) for Poisson counts."""
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=0.1)

        report = nef_split_validate(model, [0.5], 0.25, N_MIN, rng, tv_counts=(6,))

        assert report.row("y=6 tv_aux_law").value < 0.01
        assert report.row("y=6 tv_aux_law").passed

    def test_binomial_notes_conventions(self, rng):
        """Test that the binomial report records the split and loss conventions."""
        model = NoiseModel(family=NoiseFamily.BINOMIAL, n_trials=8)

        report = nef_split_validate(model, [0.4], 0.5, N_MIN, rng, tv_counts=(4, 10))

        assert any("HypGeo" in note for note in report.notes)
        assert report.row("y=4 binomial_stationary_point").value == pytest.approx(0.5)
        # counts above n are skipped
        with pytest.raises(KeyError):
            report.row("y=10 tv_aux_law")

    def test_rejects_non_nef(self, rng):
        """Test that additive non-Gaussian families are refused."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_LAPLACE, b=0.1)
        with pytest.raises(ValueError, match="NEF family"):
            nef_split_validate(model, [0.5], 0.5, N_MIN, rng)

    def test_rejects_small_sample(self, rng):
        """Test the minimum Monte Carlo budget."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_GAUSSIAN, sigma=0.1)
        with pytest.raises(ValueError, match="n_mc"):
            nef_split_validate(model, [0.5], 0.5, 1000, rng)


class TestConditionalLaw:

    def test_x_free(self, rng):
        """Test that z2 | y = 6 has the same law for x = 4 and x = 8."""
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=1.0)

        report = conditional_law_tv(model, 6, [4.0, 8.0], 0.25, N_MIN, rng)

        assert report.passed
        assert report.row("x=4 vs x=8 tv").value < 0.01

    def test_unreachable_count_rejected(self, rng):
        """Test that a count too unlikely at some x fails fast instead of sampling forever."""
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=0.05)

        with pytest.raises(ValueError, match="acceptance rate"):
            conditional_law_tv(model, 10, [0.001, 0.5], 0.25, 1000, rng)

    def test_acceptance_checked_against_budget(self, rng, monkeypatch):
        """Test that the draw budget comes from MC_BATCH * MC_MAX_BATCHES."""
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=1.0)
        monkeypatch.setattr(validators.config, "MC_BATCH", 1000)
        monkeypatch.setattr(validators.config, "MC_MAX_BATCHES", 1)

        with pytest.raises(ValueError, match="within 1000 draws"):
            conditional_law_tv(model, 6, [4.0, 8.0], 0.25, N_MIN, rng)

    def test_total_variation_pads(self):
        """Test TV between pmfs of different support lengths."""
        import numpy as np

        assert total_variation(np.array([0.5, 0.5]), np.array([0.5, 0.25, 0.25])) == 0.25


class TestMomentConditions:

    def test_gaussian_pair_exact(self, rng):
        """Test that N(0, s^2) noise and auxiliary pass both conditions exactly."""
        report = check_moment_conditions(_normal(0.1), _normal(0.1), 1.0, N_MIN, rng)

        assert report.passed
        assert report.row("n3_lhs").value == pytest.approx(3e-4)
        assert report.row("n3_rhs").value == pytest.approx(3e-4)
        assert not report.asymmetric

    def test_laplace_noise_gaussian_aux(self, rng):
        """Test that variance matching passes n = 1 but fails n = 3."""
        report = check_moment_conditions(_laplace(1.0), _normal(1.0), 1.0, N_MIN, rng)

        assert report.row("n1_condition").passed
        assert report.row("n3_condition").passed is False
        assert report.row("n3_lhs").value == pytest.approx(3.0)
        assert report.row("n3_rhs").value == pytest.approx(6.0)
        assert not report.passed

    def test_identical_laws(self, rng):
        """Test that omega equal in law to eps passes at tau = 1."""
        eps = _laplace(0.04)
        report = check_moment_conditions(eps, moment_match_omega(eps, 1.0), 1.0, N_MIN, rng)
        assert report.passed

    def test_monte_carlo_fallback(self, rng):
        """Test conditions for a family without closed-form moments."""
        eps = DistSpec(family=DistFamily.BINOMIAL, n=1, p=0.5)

        report = check_moment_conditions(eps, eps, 1.0, N_MIN, rng)

        assert report.row("n1_lhs").se > 0
        assert report.asymmetric

    def test_asymmetric_flag(self, rng):
        """Test that non-centered laws raise the warning flag but still report."""
        skewed = DistSpec(family=DistFamily.GAMMA, shape=2.0, scale=1.0)

        report = check_moment_conditions(skewed, skewed, 1.0, N_MIN, rng)

        assert report.asymmetric
        assert report.warnings
        report.row("n3_condition")

    @pytest.mark.parametrize("tau, n_mc", [(0.0, N_MIN), (1.0, 10)])
    def test_argument_checks(self, rng, tau, n_mc):
        """Test tau > 0 and the Monte Carlo budget."""
        with pytest.raises(ValueError, match="check_moment_conditions"):
            check_moment_conditions(_normal(1.0), _normal(1.0), tau, n_mc, rng)

    def test_moment_match_omega_gaussian(self):
        """Test the Gaussian auxiliary law for tau != 1."""
        omega = moment_match_omega(_laplace(0.04), 2.0)
        assert omega.family == DistFamily.NORMAL
        assert omega.sigma == pytest.approx(0.2)


class TestCorrelationFunctional:

    def test_constant_f(self, rng):
        """Test that a constant f gives zero within 4 SE."""
        estimate, se = correlation_functional(
            lambda u: torch.ones_like(u), 0.3, _normal(1.0), _normal(1.0), 1.0, N_MIN, rng
        )
        assert abs(estimate) < 4 * se

    def test_linear_f_moment_matched(self, rng):
        """Test that first-order matching suffices for linear f."""
        estimate, se = correlation_functional(
            lambda u: 2 * u - 1, 0.3, _laplace(1.0), _normal(1.0), 1.0, N_MIN, rng
        )
        assert abs(estimate) < 4 * se

    def test_cubic_f_detects_fourth_moment_gap(self, rng):
        """Test E[(eps - omega)(eps + omega)^3] = E eps^4 - E omega^4 = 3 is detected."""
        estimate, se = correlation_functional(
            lambda u: u**3, 0.0, _laplace(1.0), _normal(1.0), 1.0, 2 * N_MIN, rng
        )
        assert abs(estimate) > 4 * se
        assert estimate == pytest.approx(3.0, abs=6 * se)


class TestSupervisedGap:

    def test_closed_form_constant(self, image):
        """Test sigma^2 (1 + 1 / tau^2) per pixel."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_GAUSSIAN, sigma=0.1)
        assert pair_noise_constant(model, SplitConfig(tau=1.0), image) == pytest.approx(0.02)

    def test_poisson_constant(self, image):
        """Test mean V[y | x] / alpha for Poisson pairs."""
        model = NoiseModel(family=NoiseFamily.POISSON, gamma=0.1)
        expected = float((0.1 * image).mean()) / 0.5
        assert pair_noise_constant(model, SplitConfig(alpha=0.5), image) == pytest.approx(expected)

    @pytest.mark.parametrize(
        "denoiser",
        [lambda y: 0.5 * y + 0.1, lambda y: torch.tanh(y)],
    )
    def test_gap_matches_constant(self, rng, image, denoiser):
        """Test the estimated gap against the closed-form constant within 4 SE."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_GAUSSIAN, sigma=0.1)

        gap = gr2r_supervised_gap(denoiser, model, SplitConfig(tau=1.0), image, 4000, rng)

        assert gap.closed_form == pytest.approx(0.02)
        assert abs(gap.estimate - gap.closed_form) < 4 * gap.se

    def test_oracle_denoiser_gap(self, rng, image):
        """Test that f = x leaves exactly E||x - y2||^2 / n."""
        model = NoiseModel(family=NoiseFamily.ADDITIVE_GAUSSIAN, sigma=0.1)

        gap = gr2r_supervised_gap(
            lambda y: image.expand_as(y), model, SplitConfig(tau=1.0), image, 4000, rng
        )

        assert abs(gap.estimate - 0.02) < 4 * gap.se
