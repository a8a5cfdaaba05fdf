import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy import stats

from src.configs.env_config import config
from src.models.noise_models import DistFamily, DistSpec, NoiseFamily, NoiseModel
from src.models.report_models import ConditionReport, GapReport, MomentEstimate, ValidationReport
from src.models.splitting_models import SplitConfig
from src.services.autodiff.primitives import as_tensor
from src.services.noise import corrupt, model_mean_var
from src.services.samplers import (
    RngStream,
    dist_mean_var,
    dist_raw_moment,
    jackknife_mean,
    moment_report,
    sample,
)
from src.services.splitting.losses import binomial_stationary_point
from src.services.splitting.recorruption import binomial_draws, gr2r_pair

logger = logging.getLogger(__name__)

# Constants to avoid magic numbers
MIN_VALIDATION_SAMPLES = 100_000
Z_THRESHOLD = 4.0
VARIANCE_TOLERANCE = 0.02
CORRELATION_LIMIT = 0.01
TV_LIMIT = 0.01
DEFAULT_TV_COUNTS = (4, 6, 10)
# Expected acceptances must cover n_samples this many times over
ACCEPTANCE_MARGIN = 2.0
# Relative tolerance for conditions evaluated from closed forms only
EXACT_TOLERANCE = 1e-12


def _chunks(total: int) -> List[int]:
    size = max(1, config.MC_BATCH)
    return [min(size, total - start) for start in range(0, total, size)]


class _Accumulator:
    """Running first and second moments of a pair of samples."""

    def __init__(self):
        self.n = 0
        self.s1 = self.s2 = self.s11 = self.s22 = self.s12 = 0.0

    def update(self, a: torch.Tensor, b: torch.Tensor) -> None:
        a = a.reshape(-1).double()
        b = b.reshape(-1).double()
        self.n += a.numel()
        self.s1 += float(a.sum())
        self.s2 += float(b.sum())
        self.s11 += float((a * a).sum())
        self.s22 += float((b * b).sum())
        self.s12 += float((a * b).sum())

    def stats(self) -> Dict[str, float]:
        n = self.n
        m1, m2 = self.s1 / n, self.s2 / n
        v1 = (self.s11 - n * m1 * m1) / (n - 1)
        v2 = (self.s22 - n * m2 * m2) / (n - 1)
        cov = (self.s12 - n * m1 * m2) / (n - 1)
        return {"m1": m1, "m2": m2, "v1": v1, "v2": v2, "corr": cov / math.sqrt(v1 * v2)}


def _empirical_pmf(values: np.ndarray, support: int) -> np.ndarray:
    counts = np.bincount(values.astype(np.int64), minlength=support + 1)[: support + 1]
    return counts / values.size


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    size = max(p.size, q.size)
    p = np.pad(p, (0, size - p.size))
    q = np.pad(q, (0, size - q.size))
    return 0.5 * float(np.abs(p - q).sum())


def _aux_pmf(model: NoiseModel, y_counts: int, alpha: float) -> np.ndarray:
    support = np.arange(y_counts + 1)
    if model.family == NoiseFamily.POISSON:
        return stats.binom.pmf(support, y_counts, alpha)
    draws = binomial_draws(model.n_trials, alpha)
    return stats.hypergeom.pmf(support, model.n_trials, y_counts, draws)


def _omega_counts(model: NoiseModel, y_counts: torch.Tensor, cfg: SplitConfig, rng: RngStream) -> np.ndarray:
    """Auxiliary draws z2 given count observations, back in count units."""
    scale = model.gamma if model.family == NoiseFamily.POISSON else 1.0 / model.n_trials
    pair = gr2r_pair(y_counts * scale, model, cfg, rng)
    omega = pair.y2 * pair.alpha / scale
    return np.rint(omega.numpy()).astype(np.int64)


def nef_split_validate(
    model: NoiseModel,
    x_grid: Sequence[float],
    alpha: float,
    n_mc: int,
    rng: RngStream,
    tv_counts: Sequence[int] = DEFAULT_TV_COUNTS,
) -> ValidationReport:
    """Monte Carlo audit of the NEF splitting identities on a grid of clean values.

    For each x: unbiasedness of y1 and y2 (in SE units), variance inflation
    against 1/(1-alpha) and 1/alpha, and the conditional correlation of the
    pair. Discrete families also compare the law of z2 | y with the
    auxiliary pmf at the counts in tv_counts.

    Raises:
        ValueError: non-NEF family or fewer than 1e5 samples
    """
    if not model.is_nef:
        raise ValueError(f"{model.family.value}: nef_split_validate needs an NEF family")
    if n_mc < MIN_VALIDATION_SAMPLES:
        raise ValueError(f"nef_split_validate: n_mc={n_mc} must be >= {MIN_VALIDATION_SAMPLES}")

    cfg = SplitConfig(alpha=alpha)
    report = ValidationReport(title=f"nef_split {model.describe()} alpha={alpha}")
    effective_alpha = alpha
    if model.family == NoiseFamily.BINOMIAL:
        effective_alpha = binomial_draws(model.n_trials, alpha) / model.n_trials
        report.notes.append(
            f"HypGeo convention: population n={model.n_trials}, successes y, "
            f"draws round_half_even(n alpha)={binomial_draws(model.n_trials, alpha)}"
        )
        report.notes.append(
            "binomial loss implemented as printed; stationary point f* = y2_counts / n"
        )

    for index, x in enumerate(x_grid):
        stream = rng.child(index)
        acc = _Accumulator()
        for size in _chunks(n_mc):
            xs = torch.full((size,), float(x), dtype=torch.float64)
            pair = gr2r_pair(corrupt(xs, model, stream), model, cfg, stream)
            acc.update(pair.y1, pair.y2)
        moments = acc.stats()
        _, var_y = model_mean_var(model, [float(x)])
        var_y = float(var_y[0])
        tag = f"x={x:.4g}"
        for key, mean_key, var_key, expected in (
            ("y1", "m1", "v1", 1 / (1 - effective_alpha)),
            ("y2", "m2", "v2", 1 / effective_alpha),
        ):
            se = math.sqrt(moments[var_key] / acc.n)
            z = abs(moments[mean_key] - x) / se
            report.add(f"{tag} mean_{key}_z", z, threshold=Z_THRESHOLD, passed=z < Z_THRESHOLD)
            ratio = moments[var_key] / var_y
            report.add(
                f"{tag} var_ratio_{key}",
                ratio,
                threshold=expected,
                passed=abs(ratio / expected - 1) <= VARIANCE_TOLERANCE,
            )
        corr = moments["corr"]
        report.add(
            f"{tag} corr_y1_y2", corr, threshold=CORRELATION_LIMIT, passed=abs(corr) < CORRELATION_LIMIT
        )

    if model.family in (NoiseFamily.POISSON, NoiseFamily.BINOMIAL):
        n_tv = min(n_mc, MIN_VALIDATION_SAMPLES)
        limit = model.n_trials if model.family == NoiseFamily.BINOMIAL else None
        for index, y_counts in enumerate(tv_counts):
            if limit is not None and y_counts > limit:
                continue
            fixed = torch.full((n_tv,), float(y_counts), dtype=torch.float64)
            omega = _omega_counts(model, fixed, cfg, rng.child(len(x_grid) + index))
            tv = total_variation(
                _empirical_pmf(omega, y_counts), _aux_pmf(model, y_counts, alpha)
            )
            report.add(f"y={y_counts} tv_aux_law", tv, threshold=TV_LIMIT, passed=tv < TV_LIMIT)
            if model.family == NoiseFamily.BINOMIAL:
                report.add(
                    f"y={y_counts} binomial_stationary_point",
                    float(binomial_stationary_point(torch.tensor(float(y_counts)), model.n_trials)),
                )
    logger.info(
        f"nef_split_validate {model.describe()}: {len(report.rows)} rows, passed={report.passed}"
    )
    return report


def _check_acceptance(rate: float, y_counts: int, n_samples: int, x: float) -> None:
    acceptance = float(stats.poisson.pmf(y_counts, rate))
    budget = config.MC_BATCH * config.MC_MAX_BATCHES
    if acceptance * budget < ACCEPTANCE_MARGIN * n_samples:
        raise ValueError(
            f"conditional_law_tv: acceptance rate {acceptance:.3g} of y={y_counts} at x={x} "
            f"cannot yield {n_samples} samples within {budget} draws"
        )


def conditional_law_tv(
    model: NoiseModel,
    y_counts: int,
    x_values: Sequence[float],
    alpha: float,
    n_samples: int,
    rng: RngStream,
) -> ValidationReport:
    """Check that z2 | y does not depend on the clean value that produced y.

    Observations are simulated at each x and kept only when they equal y_counts;
    the auxiliary draws of the kept samples form the empirical conditional law.

    Raises:
        ValueError: Non-poisson model, or y_counts too unlikely at some x for the draw budget
        RuntimeError: Draw budget spent before n_samples observations were kept
    """
    if model.family != NoiseFamily.POISSON:
        raise ValueError(f"{model.family.value}: conditional_law_tv supports poisson only")
    cfg = SplitConfig(alpha=alpha)
    reference = _aux_pmf(model, y_counts, alpha)
    report = ValidationReport(title=f"x_free y={y_counts} alpha={alpha}")
    for x in x_values:
        _check_acceptance(float(x) / model.gamma, y_counts, n_samples, x)
    pmfs = []
    for index, x in enumerate(x_values):
        stream = rng.child(index)
        accepted = 0
        batches = 0
        omegas = []
        while accepted < n_samples:
            if batches >= config.MC_MAX_BATCHES:
                raise RuntimeError(
                    f"conditional_law_tv: {accepted}/{n_samples} samples at x={x} "
                    f"after {batches} batches of {config.MC_BATCH}"
                )
            batches += 1
            draws = stream.generator.poisson(float(x) / model.gamma, size=config.MC_BATCH)
            kept = int((draws == y_counts).sum())
            if kept == 0:
                continue
            take = min(kept, n_samples - accepted)
            fixed = torch.full((take,), float(y_counts), dtype=torch.float64)
            omegas.append(_omega_counts(model, fixed, cfg, stream))
            accepted += take
        pmf = _empirical_pmf(np.concatenate(omegas), y_counts)
        pmfs.append(pmf)
        tv = total_variation(pmf, reference)
        report.add(f"x={x:.4g} tv_aux_law", tv, threshold=TV_LIMIT, passed=tv < TV_LIMIT)
    for i in range(len(pmfs)):
        for j in range(i + 1, len(pmfs)):
            tv = total_variation(pmfs[i], pmfs[j])
            report.add(
                f"x={x_values[i]:.4g} vs x={x_values[j]:.4g} tv",
                tv,
                threshold=TV_LIMIT,
                passed=tv < TV_LIMIT,
            )
    return report


def _moments(spec: DistSpec, n_mc: int, rng: RngStream) -> List[MomentEstimate]:
    closed = [dist_raw_moment(spec, order) for order in range(1, 5)]
    if all(value is not None for value in closed):
        return [MomentEstimate(order=k + 1, value=v, se=0.0) for k, v in enumerate(closed)]
    return moment_report(spec, n_mc, 4, rng)


def _condition_passes(diff: float, se: float, scale: float) -> bool:
    if se > 0:
        return abs(diff) <= Z_THRESHOLD * se
    return abs(diff) <= EXACT_TOLERANCE * max(1.0, abs(scale))


def check_moment_conditions(
    eps_spec: DistSpec,
    omega_spec: DistSpec,
    tau: float,
    n_mc: int,
    rng: RngStream,
) -> ConditionReport:
    """Report both sides of the n = 1 and n = 3 moment conditions.

    n = 1: E[omega^2] = E[eps^2]
    n = 3: E[omega^4] = E[eps^4] / tau^2 - 3 (E[eps^2])^2 (1 - 1/tau^2)

    Closed-form moments are used when the family has them, Monte Carlo with
    jackknife errors otherwise. Odd moments further than 4 SE from zero raise
    the asymmetry flag without stopping the report.
    """
    if tau <= 0:
        raise ValueError(f"check_moment_conditions: tau={tau} must be > 0")
    if n_mc < MIN_VALIDATION_SAMPLES:
        raise ValueError(f"check_moment_conditions: n_mc={n_mc} must be >= {MIN_VALIDATION_SAMPLES}")

    eps = _moments(eps_spec, n_mc, rng.child(0))
    omega = _moments(omega_spec, n_mc, rng.child(1))
    report = ConditionReport(
        title=f"moments eps={eps_spec.describe()} omega={omega_spec.describe()} tau={tau}"
    )

    for label, moments in (("eps", eps), ("omega", omega)):
        for estimate in (moments[0], moments[2]):
            if not _condition_passes(estimate.value, estimate.se, 1.0):
                report.asymmetric = True
                report.warnings.append(
                    f"{label}: odd moment E[X^{estimate.order}]={estimate.value:.4g} "
                    f"is not zero (se {estimate.se:.2g})"
                )
    if report.asymmetric:
        logger.warning(f"Asymmetric law detected: {'; '.join(report.warnings)}")

    e2, e4 = eps[1], eps[3]
    w2, w4 = omega[1], omega[3]

    se1 = math.hypot(w2.se, e2.se)
    diff1 = w2.value - e2.value
    report.add("n1_lhs", w2.value, se=w2.se)
    report.add("n1_rhs", e2.value, se=e2.se)
    report.add(
        "n1_condition", diff1, se=se1, threshold=Z_THRESHOLD * se1,
        passed=_condition_passes(diff1, se1, e2.value),
    )

    shrink = 1 - 1 / tau**2
    rhs3 = e4.value / tau**2 - 3 * e2.value**2 * shrink
    rhs3_se = math.hypot(e4.se / tau**2, 6 * e2.value * shrink * e2.se)
    se3 = math.hypot(w4.se, rhs3_se)
    diff3 = w4.value - rhs3
    report.add("n3_lhs", w4.value, se=w4.se)
    report.add("n3_rhs", rhs3, se=rhs3_se)
    report.add(
        "n3_condition", diff3, se=se3, threshold=Z_THRESHOLD * se3,
        passed=_condition_passes(diff3, se3, rhs3),
    )
    if rhs3 != 0:
        report.add("n3_ratio", w4.value / rhs3)
    return report


def correlation_functional(
    f: Callable[[torch.Tensor], torch.Tensor],
    x: float,
    eps_spec: DistSpec,
    omega_spec: DistSpec,
    tau: float,
    n_mc: int,
    rng: RngStream,
) -> Tuple[float, float]:
    """Monte Carlo E[(eps - omega/tau) f(x + eps + tau omega)] with its SE."""
    eps = sample(eps_spec, (n_mc,), rng.child(0))
    omega = sample(omega_spec, (n_mc,), rng.child(1))
    values = (eps - omega / tau) * f(x + eps + tau * omega)
    estimate = jackknife_mean(values.detach().numpy())
    return estimate.value, estimate.se


def moment_match_omega(eps_spec: DistSpec, tau: float) -> Optional[DistSpec]:
    """Auxiliary law satisfying the n = 1 condition for eps.

    For tau = 1 the noise law itself satisfies every condition; otherwise a
    centered Gaussian with E[omega^2] = E[eps^2] is returned.
    """
    if tau == 1.0:
        return eps_spec.model_copy()
    second = dist_raw_moment(eps_spec, 2)
    if second is None:
        mean, var = dist_mean_var(eps_spec)
        second = var + mean**2
    return DistSpec(family=DistFamily.NORMAL, sigma=math.sqrt(second))


def pair_noise_constant(model: NoiseModel, cfg: SplitConfig, x: torch.Tensor) -> Optional[float]:
    """Closed-form per-pixel E||y2 - x||^2 / n, when the pair law admits one."""
    _, var = model_mean_var(model, x)
    mean_var = float(var.mean())
    if model.is_additive:
        tau = cfg.resolved_tau()
        if cfg.aux is not None:
            aux_mean, aux_var = dist_mean_var(cfg.aux)
            return mean_var + (aux_var + aux_mean**2) / tau**2
        return mean_var * (1 + 1 / tau**2)
    if model.family in (NoiseFamily.POISSON, NoiseFamily.GAMMA):
        return mean_var / cfg.resolved_alpha()
    if model.family == NoiseFamily.BINOMIAL:
        return mean_var * model.n_trials / binomial_draws(model.n_trials, cfg.resolved_alpha())
    return None


def gr2r_supervised_gap(
    f: Callable[[torch.Tensor], torch.Tensor],
    model: NoiseModel,
    cfg: SplitConfig,
    x_truth,
    n_mc: int,
    rng: RngStream,
) -> GapReport:
    """Per-pixel E||f(y1) - y2||^2 - E||f(y1) - x||^2 and its closed-form constant.

    Replicas are stacked along a new leading dimension, so f receives tensors
    of shape (replicas, *x_truth.shape).
    """
    x = as_tensor(x_truth)
    per_chunk = max(1, config.MC_BATCH // max(1, x.numel()))
    gaps = []
    done = 0
    with torch.no_grad():
        while done < n_mc:
            size = min(per_chunk, n_mc - done)
            xs = x.expand(size, *x.shape).clone()
            pair = gr2r_pair(corrupt(xs, model, rng), model, cfg, rng)
            out = f(pair.y1)
            dims = tuple(range(1, out.dim()))
            self_supervised = ((out - pair.y2) ** 2).mean(dim=dims) if dims else (out - pair.y2) ** 2
            supervised = ((out - xs) ** 2).mean(dim=dims) if dims else (out - xs) ** 2
            gaps.append((self_supervised - supervised).numpy())
            done += size
    estimate = jackknife_mean(np.concatenate(gaps))
    return GapReport(
        estimate=estimate.value,
        se=estimate.se,
        closed_form=pair_noise_constant(model, cfg, x),
    )
