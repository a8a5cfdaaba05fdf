import math

import pytest
import torch

from src.models.l2r_models import DiagnosticsRecord, RecorruptorConfig
from src.models.noise_models import NoiseModel
from src.services.l2r import (
    Recorruptor,
    diagnostics,
    gr2r_rewrite_check,
    learned_transport,
    run_identity_suite,
    stop_gradient_gap,
    transport_agreement,
    unsure_reduction_check,
)
from src.services.noise import default_kernel
from src.services.samplers import RngStream

# Constants to avoid magic numbers
SIGMA = 0.1


def _gaussian_recorruptor(scale: float = SIGMA) -> Recorruptor:
    """h(w') = scale * standardized w', a linear map with a scaled delta kernel."""
    return Recorruptor(RecorruptorConfig(depth=1, width=1, init_scale=scale), seed=0)


class TestDiagnostics:

    def test_constant_denoiser(self, rng, image):
        """Test that C_eps and C_h vanish for a constant f."""
        constant = torch.full_like(image, 0.5)

        record = diagnostics(
            lambda y: constant, _gaussian_recorruptor(), lambda w: SIGMA * w, image, 1.0, 400, rng
        )

        assert abs(record.c_eps) < 4 * record.se_eps
        assert abs(record.c_h) < 4 * record.se_h

    def test_identity_denoiser_balanced(self, rng, image):
        """Test C_eps = C_h = sigma^2 for f = identity and h matching the noise."""
        record = diagnostics(
            lambda y: y, _gaussian_recorruptor(), lambda w: SIGMA * w, image, 1.0, 400, rng, epoch=3
        )

        assert record.epoch == 3
        assert abs(record.c_eps - SIGMA**2) < 4 * record.se_eps + 1e-4
        assert abs(record.c_h - SIGMA**2) < 4 * record.se_h + 1e-4
        assert record.c_delta < 2e-3

    def test_c_delta_is_absolute_gap(self):
        """Test C_delta = |C_eps - C_h|."""
        assert DiagnosticsRecord(epoch=0, c_eps=0.1, c_h=0.4).c_delta == pytest.approx(0.3)


class TestGr2rRewrite:

    @pytest.mark.parametrize("tau", [0.3, 1.0, 2.5])
    def test_random_denoiser(self, rng, tau):
        """Test that the two loss forms agree to 1e-9 per sample."""
        h = Recorruptor(RecorruptorConfig(kernel_size=3), seed=1)
        y = rng.child(0).standard_normal((3, 1, 8, 8))

        gap = gr2r_rewrite_check(lambda u: torch.sin(2 * u), h, y, tau, rng.child(1))

        assert gap < 1e-9

    def test_zero_recorruption(self, rng):
        """Test that h = 0 leaves both sides at ||f(y) - y||^2."""
        h = Recorruptor(RecorruptorConfig(), seed=2)
        with torch.no_grad():
            h.kernel.zero_()
        y = rng.standard_normal((2, 1, 4, 4))

        assert gr2r_rewrite_check(torch.tanh, h, y, 1.0, rng) == 0.0


class TestUnsureReduction:

    def test_scalar_identity(self, rng):
        """Test 2 eta tr(I_4) = 2.0 at eta = 0.25 for every tau."""
        report = unsure_reduction_check(torch.eye(4), 0.25, [0.5, 1.0, 2.0], 200_000, rng)

        assert report.passed
        for row in report.rows:
            assert row.threshold == pytest.approx(2.0)
            assert abs(row.value - 2.0) <= 4 * row.se

    def test_zero_matrix(self, rng):
        """Test that A = 0 gives zero exactly."""
        report = unsure_reduction_check(torch.zeros(4, 4), 0.5, [1.0], 1000, rng)

        assert report.rows[0].value == 0.0
        assert report.passed

    @pytest.mark.parametrize("seed", range(10))
    def test_random_scalar_cases(self, seed):
        """Test the scalar reduction for random A, eta in [0.1, 1] and tau in [0.25, 2]."""
        stream = RngStream(seed, 0)
        a = stream.standard_normal((8, 8))
        eta = float(stream.generator.uniform(0.1, 1.0))
        taus = [float(tau) for tau in stream.generator.uniform(0.25, 2.0, size=2)]

        report = unsure_reduction_check(a, eta, taus, 100_000, stream.child(0))

        assert report.passed
        for row in report.rows:
            assert row.threshold == pytest.approx(2 * eta * float(torch.trace(a)))
            assert abs(row.value - row.threshold) <= 4 * row.se

    def test_convolutional_recorruption(self, rng):
        """Test 2 n sum(k^2) for h = k * w' and A = I."""
        kernel = default_kernel()
        expected = 2 * 16 * float((kernel**2).sum())

        report = unsure_reduction_check(
            torch.eye(16), 1.0, [1.0], 200_000, rng, kernel=kernel, image_shape=(4, 4)
        )

        assert report.rows[0].threshold == pytest.approx(expected)
        assert report.passed

    def test_shape_checks(self, rng):
        """Test that A must be square and match the image shape."""
        with pytest.raises(ValueError, match="square"):
            unsure_reduction_check(torch.zeros(3, 4), 1.0, [1.0], 10, rng)
        with pytest.raises(ValueError, match="image_shape"):
            unsure_reduction_check(
                torch.eye(9), 1.0, [1.0], 10, rng, kernel=default_kernel(), image_shape=(4, 4)
            )


class TestTransport:

    def test_learned_transport_of_linear_map(self):
        """Test that the transport of a linear h is affine."""
        h = _gaussian_recorruptor()
        grid = torch.linspace(-2, 2, 5, dtype=torch.float64)

        values = learned_transport(h, grid)

        increments = torch.diff(values)
        assert torch.allclose(increments, increments[0].expand_as(increments))

    @pytest.mark.parametrize(
        "model",
        [
            NoiseModel(family="additive_gaussian", sigma=0.1),
            NoiseModel(family="additive_laplace", b=0.1),
            NoiseModel(family="correlated_gaussian", sigma=0.1),
        ],
    )
    def test_monotone_maps_agree_in_rank(self, model):
        """Test Spearman 1 between a monotone h and any increasing oracle map."""
        h = Recorruptor(RecorruptorConfig(), seed=3)
        grid = torch.linspace(-3, 3, 41, dtype=torch.float64)

        assert transport_agreement(h, model, grid) == pytest.approx(1.0)


class TestIdentitySuite:

    def test_stop_gradient_gap(self):
        """Test that the h gradient ignores the path through f."""
        assert stop_gradient_gap(RngStream(21, 0)) < 1e-10

    def test_suite_passes(self):
        """Test every identity of the min-max objective."""
        report = run_identity_suite(RngStream(22, 0))

        failed = [row.name for row in report.rows if row.passed is False]
        assert failed == []
        assert math.isfinite(report.row("gr2r_rewrite").value)
