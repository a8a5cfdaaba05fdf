import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy import stats

from src.models.l2r_models import DiagnosticsRecord
from src.models.noise_models import NoiseFamily, NoiseModel
from src.models.report_models import ValidationReport
from src.services.autodiff.primitives import DTYPE, as_tensor
from src.services.l2r.recorruptor import Recorruptor
from src.services.noise import circular_filter, noise_map
from src.services.samplers import RngStream, jackknife_mean

logger = logging.getLogger(__name__)

Denoiser = Callable[[torch.Tensor], torch.Tensor]
NoiseMap = Callable[[torch.Tensor], torch.Tensor]

# Constants to avoid magic numbers
Z_THRESHOLD = 4.0
EXACT_TOLERANCE = 1e-12


def diagnostics(
    f: Denoiser,
    h: Recorruptor,
    oracle_g: NoiseMap,
    x: torch.Tensor,
    tau: float,
    n_mc: int,
    rng: RngStream,
    epoch: int = 0,
) -> DiagnosticsRecord:
    """Equilibrium diagnostics on simulated data y = x + g(w).

    C_eps = E[f(y1)^T g(w)] / n tracks the true noise correlation, C_h =
    E[f(y1)^T h(w')] / (tau n) the one the recorruptor induces, y1 = y + tau h(w').
    """
    c_eps, c_h = [], []
    n = x.numel()
    with torch.no_grad():
        for _ in range(n_mc):
            noise = oracle_g(rng.standard_normal(x.shape))
            y = x + noise
            w_prime = rng.standard_normal(x.shape)
            hw = h(w_prime, torch.clamp(y, min=0) if h.pg_scale else None)
            out = f(y + tau * hw)
            c_eps.append(float((out * noise).sum()) / n)
            c_h.append(float((out * hw).sum()) / (tau * n))
    eps_estimate = jackknife_mean(np.asarray(c_eps))
    h_estimate = jackknife_mean(np.asarray(c_h))
    record = DiagnosticsRecord(
        epoch=epoch,
        c_eps=eps_estimate.value,
        c_h=h_estimate.value,
        se_eps=eps_estimate.se,
        se_h=h_estimate.se,
    )
    logger.debug(
        f"diagnostics epoch {epoch}: C_eps {record.c_eps:.4g} C_h {record.c_h:.4g} "
        f"C_delta {record.c_delta:.4g}"
    )
    return record


def gr2r_rewrite_check(
    f: Denoiser, h: Recorruptor, y_batch: torch.Tensor, tau: float, rng: RngStream
) -> float:
    """Max per-sample gap between the L2R loss and its GR2R form.

    ||f(y1) - y||^2 + (2/tau) f(y1)^T h  versus
    ||f(y1) - y2||^2 + (1/tau) (y + y2)^T h, with y2 = y - h / tau and a shared w'.
    """
    with torch.no_grad():
        w_prime = rng.standard_normal(y_batch.shape)
        hw = h(w_prime, torch.clamp(y_batch, min=0) if h.pg_scale else None)
        out = f(y_batch + tau * hw)
        y2 = y_batch - hw / tau
        dims = tuple(range(1, y_batch.dim()))
        lhs = ((out - y_batch) ** 2).sum(dims) + (2 / tau) * (out * hw).sum(dims)
        rhs = ((out - y2) ** 2).sum(dims) + (1 / tau) * ((y_batch + y2) * hw).sum(dims)
    return float((lhs - rhs).abs().max())


def filter_matrix_circular(kernel: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Dense matrix of circular_filter on (height, width) images, row-major pixels."""
    n = height * width
    basis = torch.eye(n, dtype=DTYPE).reshape(n, height, width)
    return circular_filter(basis, kernel).reshape(n, n).t()


def unsure_reduction_check(
    A,
    eta: float,
    tau_seq: Sequence[float],
    n_mc: int,
    rng: RngStream,
    kernel: Optional[torch.Tensor] = None,
    image_shape: Optional[Tuple[int, int]] = None,
) -> ValidationReport:
    """Check that the L2R correlation term reduces to an UNSURE divergence for linear maps.

    With f(y) = A y, (2/tau) E[f(y + tau h)^T h] equals 2 eta tr(A) for
    h(w') = sqrt(eta) w', and 2 tr(Sigma A) for h(w') = k * w' with Sigma = K K^T.

    Args:
        A: Linear denoiser matrix (n, n)
        eta: Multiplier of the scalar case
        tau_seq: Recorruption strengths to check
        n_mc: Draws of w' per tau
        rng: Stream; tau i uses child stream i
        kernel: Switches to the convolutional case when given
        image_shape: Required with kernel, height * width must equal n
    """
    A = as_tensor(A)
    if A.dim() != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"unsure_reduction_check: A must be square, got {tuple(A.shape)}")
    n = A.shape[0]
    report = ValidationReport(title="unsure reduction")

    if kernel is None:
        closed_form = 2 * eta * float(torch.trace(A))

        def draw_h(stream: RngStream) -> torch.Tensor:
            return eta**0.5 * stream.standard_normal((n_mc, n))

    else:
        if image_shape is None or image_shape[0] * image_shape[1] != n:
            raise ValueError(
                f"unsure_reduction_check: image_shape {image_shape} does not match n={n}"
            )
        K = filter_matrix_circular(kernel, *image_shape)
        closed_form = 2 * float(torch.trace(K @ K.t() @ A))

        def draw_h(stream: RngStream) -> torch.Tensor:
            w = stream.standard_normal((n_mc, *image_shape))
            return circular_filter(w, kernel).reshape(n_mc, n)

    y = rng.child(len(tau_seq)).standard_normal((n,))
    for i, tau in enumerate(tau_seq):
        hw = draw_h(rng.child(i))
        out = (y + tau * hw) @ A.t()
        values = (2 / tau) * (out * hw).sum(dim=1)
        estimate = jackknife_mean(values.numpy())
        gap = abs(estimate.value - closed_form)
        passed = gap <= max(Z_THRESHOLD * estimate.se, EXACT_TOLERANCE)
        report.add(f"tau={tau:g}", estimate.value, estimate.se, closed_form, passed)
    logger.info(f"unsure reduction: closed form {closed_form:.6g}, passed={report.passed}")
    return report


def learned_transport(h: Recorruptor, grid) -> torch.Tensor:
    """Values of the learned scalar map on a grid of standard-normal quantiles."""
    with torch.no_grad():
        return h.scalar_map(as_tensor(grid))


def oracle_scalar_map(model: NoiseModel) -> NoiseMap:
    """Pre-kernel scalar transport of the model; correlated noise maps w to sigma w."""
    if model.family == NoiseFamily.CORRELATED_GAUSSIAN:
        return lambda w: model.sigma * w
    return noise_map(model)


def transport_agreement(h: Recorruptor, model: NoiseModel, grid) -> float:
    """Spearman rank correlation between the learned and the oracle scalar map."""
    grid = as_tensor(grid)
    learned = learned_transport(h, grid).numpy()
    oracle = oracle_scalar_map(model)(grid).numpy()
    rho, _ = stats.spearmanr(learned, oracle)
    logger.info(f"transport agreement with {model.describe()}: spearman {rho:.4f}")
    return float(rho)
