import logging

import torch

from src.models.l2r_models import L2RConfig, RecorruptorConfig
from src.models.report_models import ValidationReport
from src.services.l2r.checks import gr2r_rewrite_check, unsure_reduction_check
from src.services.l2r.objective import l2r_losses
from src.services.l2r.recorruptor import Recorruptor
from src.services.noise import default_kernel
from src.services.samplers import RngStream

logger = logging.getLogger(__name__)

REWRITE_TOLERANCE = 1e-9
STOP_GRADIENT_TOLERANCE = 1e-10
REDUCTION_SAMPLES = 200_000
MONOTONE_GRID = torch.linspace(-3.0, 3.0, 61, dtype=torch.float64)


def _nonlinear_denoiser(y: torch.Tensor) -> torch.Tensor:
    return 0.5 * torch.tanh(y) + 0.1 * y**2


def stop_gradient_gap(rng: RngStream) -> float:
    """Max gap between the h gradient of l2r_losses and the correlation-only gradient."""
    h = Recorruptor(RecorruptorConfig(), seed=rng.child(0).torch_seed())
    y = rng.child(1).standard_normal((2, 1, 8, 8))
    cfg = L2RConfig(tau=0.7)
    params = list(h.parameters())

    _, loss_h = l2r_losses(_nonlinear_denoiser, h, y, cfg, rng.child(2))
    grads = torch.autograd.grad(loss_h, params, allow_unused=True)

    hw = h(rng.child(2).standard_normal(y.shape))
    out = _nonlinear_denoiser(y + cfg.tau * hw).detach()
    reference = -cfg.correlation_factor * torch.mean(out * hw)
    expected = torch.autograd.grad(reference, params, allow_unused=True)
    gap = 0.0
    for got, want in zip(grads, expected):
        if got is None and want is None:
            continue
        got = torch.zeros_like(want) if got is None else got
        want = torch.zeros_like(got) if want is None else want
        gap = max(gap, float((got - want).abs().max()))
    return gap


def run_identity_suite(rng: RngStream) -> ValidationReport:
    """Exact identities of the min-max objective and its UNSURE reductions."""
    report = ValidationReport(title="identities")

    h = Recorruptor(RecorruptorConfig(kernel_size=3), seed=rng.child(0).torch_seed())
    y = rng.child(1).standard_normal((4, 1, 8, 8))
    rewrite = gr2r_rewrite_check(_nonlinear_denoiser, h, y, 0.8, rng.child(2))
    report.add("gr2r_rewrite", rewrite, threshold=REWRITE_TOLERANCE, passed=rewrite < REWRITE_TOLERANCE)

    gap = stop_gradient_gap(rng.child(3))
    report.add(
        "stop_gradient_h_path", gap, threshold=STOP_GRADIENT_TOLERANCE, passed=gap < STOP_GRADIENT_TOLERANCE
    )

    with torch.no_grad():
        values = h.scalar_map(MONOTONE_GRID)
    steps = float((values[1:] - values[:-1]).min())
    report.add("monotone_min_increment", steps, threshold=0.0, passed=steps >= 0)

    scalar = unsure_reduction_check(
        torch.eye(4, dtype=torch.float64), 0.25, [0.5, 1.0, 2.0], REDUCTION_SAMPLES, rng.child(4)
    )
    conv = unsure_reduction_check(
        torch.eye(16, dtype=torch.float64),
        1.0,
        [1.0],
        REDUCTION_SAMPLES,
        rng.child(5),
        kernel=default_kernel(),
        image_shape=(4, 4),
    )
    for prefix, sub in (("unsure_scalar", scalar), ("unsure_conv", conv)):
        for row in sub.rows:
            report.add(f"{prefix}_{row.name}", row.value, row.se, row.threshold, row.passed)
    logger.info(f"Identity suite: passed={report.passed}")
    return report
