import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
from tqdm import tqdm

from src.configs.env_config import config
from src.models.l2r_models import L2RConfig, RecorruptorConfig
from src.models.noise_models import NoiseModel
from src.models.splitting_models import SplitConfig
from src.models.sure_models import SureConfig, UnsureState
from src.models.training_models import (
    HISTORY_COLUMNS,
    DenoiserSection,
    EvaluationRow,
    ImageSet,
    LossKind,
    MetricRecord,
    RunConfig,
    Schedule,
    TrainRun,
)
from src.services.io import emit_csv, load_checkpoint, load_images, save_checkpoint, save_run_config
from src.services.l2r import (
    NonFiniteLossError,
    Recorruptor,
    diagnostics,
    identity_pretrain,
    minmax_step,
)
from src.services.noise import corrupt, noise_map
from src.services.samplers import RngStream
from src.services.splitting import gr2r_loss, gr2r_pair
from src.services.sure import mc_divergence, sure_loss, unsure_objective
from src.services.training.denoisers import build_denoiser
from src.services.training.metrics import psnr, ssim
from src.services.training.optim import adamw_step, build_optimizer, build_scheduler

logger = logging.getLogger(__name__)

# Independent streams derived from the master seed
STREAM_CORRUPTION = 0
STREAM_INIT = 1
STREAM_ORDER = 2
STREAM_LOSS = 3
STREAM_VALIDATION = 4

RUN_CONFIG_NAME = "run.cfg"


def run_streams(seed: int) -> Dict[str, RngStream]:
    return {
        "corruption": RngStream(seed, STREAM_CORRUPTION),
        "init": RngStream(seed, STREAM_INIT),
        "order": RngStream(seed, STREAM_ORDER),
        "loss": RngStream(seed, STREAM_LOSS),
        "validation": RngStream(seed, STREAM_VALIDATION),
    }


def build_image_set(directory: str | Path, model: NoiseModel, rng: RngStream) -> ImageSet:
    """Load clean images from directory and corrupt them once with rng."""
    names, clean = load_images(directory)
    return ImageSet(names=names, clean=clean, noisy=corrupt(clean, model, rng))


def split_config(cfg: RunConfig) -> SplitConfig:
    loss = cfg.loss
    if cfg.noise.is_additive:
        if loss.alpha is not None:
            return SplitConfig(alpha=loss.alpha)
        return SplitConfig(tau=loss.tau)
    return SplitConfig(alpha=loss.alpha, tau=loss.tau, pg_weight=loss.pg_weight)


def sure_config(cfg: RunConfig) -> SureConfig:
    sigma = cfg.noise.sigma if cfg.loss.kind == LossKind.SURE else None
    return SureConfig(sigma=sigma, mc_probes=cfg.loss.mc_probes, fd_step=cfg.loss.fd_step)


def l2r_config(cfg: RunConfig) -> L2RConfig:
    section = cfg.recorruptor
    return L2RConfig(
        tau=cfg.loss.tau,
        joint=section.joint,
        use_stop_gradient=section.use_stop_gradient,
        f_lr=cfg.optim.lr_start,
        h_lr=section.h_lr,
        id_pretrain_steps=section.id_pretrain_steps,
        correlation_weight=section.correlation_weight,
        h_objective=section.h_objective,
    )


def recorruptor_config(cfg: RunConfig) -> RecorruptorConfig:
    section = cfg.recorruptor
    return RecorruptorConfig(
        depth=section.depth,
        width=section.width,
        kernel_size=section.kernel_size,
        monotone=section.monotone,
        residual=section.residual,
        pg_scale=section.pg_scale,
        init_scale=section.init_scale,
    )


def batch_loss(
    cfg: RunConfig,
    f: nn.Module,
    clean: torch.Tensor,
    noisy: torch.Tensor,
    rng: RngStream,
    state: Optional[UnsureState] = None,
) -> Tuple[torch.Tensor, Optional[float]]:
    """Loss of one batch for every loss kind except l2r.

    Returns:
        (loss, ascent gradient for the UNSURE multiplier or None)
    """
    kind = cfg.loss.kind
    if kind == LossKind.SUPERVISED:
        return torch.mean((f(noisy) - clean) ** 2), None
    if kind == LossKind.GR2R:
        pair = gr2r_pair(noisy, cfg.noise, split_config(cfg), rng)
        return gr2r_loss(f(pair.y1), pair, cfg.noise), None
    if kind == LossKind.SURE:
        return sure_loss(f, noisy, sure_config(cfg), rng), None
    if kind == LossKind.UNSURE:
        return unsure_objective(f, noisy, state, sure_config(cfg), rng)
    raise ValueError(f"batch_loss: unsupported loss kind '{kind.value}'")


def _image_metrics(prediction: torch.Tensor, clean: torch.Tensor) -> Tuple[List[float], List[float], List[bool]]:
    psnrs, ssims, capped = [], [], []
    for estimate, reference in zip(prediction, clean):
        value, flag = psnr(estimate[0], reference[0])
        psnrs.append(value)
        capped.append(flag)
        ssims.append(ssim(estimate[0], reference[0]))
    return psnrs, ssims, capped


class Trainer:
    """Runs one configured training job: data, models, optimizers and the epoch loop."""

    def __init__(self, run: TrainRun, show_progress: bool = True):
        self.run = run
        self.cfg = run.config
        self.show_progress = show_progress
        self.streams = run_streams(self.cfg.data.seed)
        corruption = self.streams["corruption"]
        self.train_set = build_image_set(self.cfg.data.train_dir, self.cfg.noise, corruption.child(0))
        self.val_set = build_image_set(self.cfg.data.val_dir, self.cfg.noise, corruption.child(1))

        init = self.streams["init"]
        self.f = build_denoiser(self.cfg.denoiser, self.cfg.noise, init.child(0).torch_seed())
        if not any(p.requires_grad for p in self.f.parameters()):
            raise ValueError(f"denoiser '{self.cfg.denoiser.kind.value}' has no trainable parameters")
        optim = self.cfg.optim
        self.optimizer = build_optimizer(self.f.parameters(), optim.lr_start, optim.weight_decay)
        self.scheduler = build_scheduler(
            self.optimizer, Schedule(lr_start=optim.lr_start, lr_end=optim.lr_end, total_steps=optim.epochs)
        )

        self.h: Optional[Recorruptor] = None
        self.h_optimizer = None
        self.l2r = None
        if self.cfg.loss.kind == LossKind.L2R:
            self.l2r = l2r_config(self.cfg)
            self.h = Recorruptor(recorruptor_config(self.cfg), seed=init.child(1).torch_seed())
            identity_pretrain(self.h, self.l2r.id_pretrain_steps, init.child(2))
            self.h_optimizer = build_optimizer(self.h.parameters(), self.l2r.h_lr, weight_decay=0.0)

        self.state: Optional[UnsureState] = None
        if self.cfg.loss.kind == LossKind.UNSURE:
            self.state = UnsureState(eta=self.cfg.loss.eta_init, step_size=self.cfg.loss.eta_step)

    def train_epoch(self, epoch: int) -> float:
        clean, noisy = self.train_set.clean, self.train_set.noisy
        order = self.streams["order"].child(epoch).permutation(noisy.shape[0])
        loss_stream = self.streams["loss"].child(epoch)
        batch_size = self.cfg.optim.batch_size
        losses = []
        for b, start in enumerate(range(0, len(order), batch_size)):
            index = torch.as_tensor(order[start : start + batch_size])
            rng = loss_stream.child(b)
            if self.h is not None:
                logs = minmax_step(
                    self.f, self.h, noisy[index], self.l2r, (self.optimizer, self.h_optimizer), rng, epoch
                )
                losses.append(logs["loss_f"])
                continue
            self.optimizer.zero_grad()
            loss, ascent = batch_loss(self.cfg, self.f, clean[index], noisy[index], rng, self.state)
            if not torch.isfinite(loss):
                logger.error(f"non-finite {self.cfg.loss.kind.value} loss at epoch {epoch}")
                raise NonFiniteLossError(self.cfg.loss.kind.value, float(loss), epoch)
            loss.backward()
            adamw_step(self.optimizer, list(self.f.named_parameters()))
            if self.state is not None:
                self.state.ascend(ascent)
            losses.append(float(loss))
        return float(np.mean(losses))

    def validate(self, epoch: int, lr: float, loss: float) -> MetricRecord:
        val = self.val_set
        stream = self.streams["validation"].child(epoch)
        with torch.no_grad():
            prediction = self.f(val.noisy)
            psnrs, ssims, capped = _image_metrics(prediction, val.clean)
            record = MetricRecord(
                epoch=epoch,
                lr=lr,
                loss=loss,
                psnr=float(np.mean(psnrs)),
                ssim=float(np.mean(ssims)),
                psnr_capped=all(capped),
            )
            if self.cfg.loss.kind in (LossKind.SURE, LossKind.UNSURE):
                divergence = mc_divergence(self.f, val.noisy, sure_config(self.cfg), stream.child(0))
                record.div = abs(float(divergence)) / val.noisy.numel()
        if self.h is not None and self.cfg.noise.is_additive:
            diag = diagnostics(
                self.f,
                self.h,
                noise_map(self.cfg.noise),
                val.clean,
                self.l2r.tau,
                self.cfg.optim.diag_mc,
                stream.child(1),
                epoch,
            )
            record.c_eps, record.c_h, record.c_delta = diag.c_eps, diag.c_h, diag.c_delta
        return record

    def fit(self) -> TrainRun:
        epochs = self.cfg.optim.epochs
        logger.info(
            f"Training {self.cfg.loss.kind.value} on {self.cfg.noise.describe()}: "
            f"{self.train_set.noisy.shape[0]} images, {epochs} epochs"
        )
        progress = tqdm(range(epochs), desc=self.cfg.loss.kind.value, disable=not self.show_progress)
        for epoch in progress:
            lr = self.optimizer.param_groups[0]["lr"]
            loss = self.train_epoch(epoch)
            self.scheduler.step()
            record = self.validate(epoch, lr, loss)
            self.run.history.append(record)
            progress.set_postfix(loss=f"{loss:.4g}", psnr=f"{record.psnr:.2f}")
            logger.debug(f"epoch {epoch}: loss {loss:.6g} psnr {record.psnr:.3f} ssim {record.ssim:.4f}")
        return self.save()

    def save(self) -> TrainRun:
        out_dir = Path(self.cfg.data.out_dir)
        checkpoint = out_dir / config.CHECKPOINT_NAME
        save_checkpoint(self.f.state_dict(), checkpoint)
        self.run.checkpoint = str(checkpoint)
        if self.h is not None:
            recorruptor = out_dir / config.RECORRUPTOR_NAME
            save_checkpoint(self.h.state_dict(), recorruptor)
            self.run.recorruptor_checkpoint = str(recorruptor)
        history = out_dir / config.HISTORY_NAME
        emit_csv([record.to_record() for record in self.run.history], history, HISTORY_COLUMNS)
        self.run.history_csv = str(history)
        save_run_config(self.cfg, out_dir / RUN_CONFIG_NAME)
        self.run.optimizer_state = self.optimizer.state_dict()
        final = self.run.history[-1] if self.run.history else None
        if final is not None:
            logger.info(f"Finished: val PSNR {final.psnr:.3f} dB, SSIM {final.ssim:.4f}; saved to {out_dir}")
        return self.run


def train(run: TrainRun | RunConfig, show_progress: bool = True) -> TrainRun:
    """
    Train the configured denoiser and save weights, history CSV and run config.

    Args:
        run (TrainRun | RunConfig): Configuration, optionally wrapped in a TrainRun
        show_progress (bool): Display a progress bar over epochs

    Returns:
        TrainRun: The run with its per-epoch history and checkpoint paths

    Raises:
        ValueError: Inconsistent configuration or unreadable datasets
        NonFiniteLossError: A loss became NaN or infinite
    """
    if isinstance(run, RunConfig):
        run = TrainRun(config=run)
    if config.TORCH_NUM_THREADS:
        torch.set_num_threads(config.TORCH_NUM_THREADS)
    return Trainer(run, show_progress).fit()


def load_denoiser(
    weights: str | Path, section: DenoiserSection, noise: NoiseModel
) -> nn.Module:
    f = build_denoiser(section, noise)
    try:
        f.load_state_dict(load_checkpoint(weights))
    except RuntimeError as e:
        if not Path(weights).exists():
            raise
        raise ValueError(f"checkpoint {weights} does not fit the configured denoiser: {e}")
    return f


def evaluate(
    weights: nn.Module | str | Path,
    dataset: ImageSet,
    model: Optional[DenoiserSection] = None,
    noise: Optional[NoiseModel] = None,
) -> List[EvaluationRow]:
    """
    Per-image PSNR/SSIM of a denoiser on a dataset, followed by a 'mean' row.

    Args:
        weights: A denoiser module, or a checkpoint path loaded into `model`
        dataset (ImageSet): Clean and noisy images
        model (Optional[DenoiserSection]): Denoiser architecture for checkpoint paths
        noise (Optional[NoiseModel]): Noise law, selects the output head

    Raises:
        ValueError: Shape mismatch or incompatible checkpoint
    """
    if isinstance(weights, nn.Module):
        f = weights
    else:
        if model is None or noise is None:
            raise ValueError("evaluate: a checkpoint path needs the denoiser section and noise model")
        f = load_denoiser(weights, model, noise)
    with torch.no_grad():
        prediction = f(dataset.noisy)
    if prediction.shape != dataset.clean.shape:
        raise ValueError(
            f"evaluate: denoiser output {tuple(prediction.shape)} != images {tuple(dataset.clean.shape)}"
        )
    psnrs, ssims, capped = _image_metrics(prediction, dataset.clean)
    rows = [
        EvaluationRow(image=name, psnr=p, ssim=s, psnr_capped=c)
        for name, p, s, c in zip(dataset.names, psnrs, ssims, capped)
    ]
    rows.append(
        EvaluationRow(
            image="mean",
            psnr=float(np.mean(psnrs)),
            ssim=float(np.mean(ssims)),
            psnr_capped=all(capped),
        )
    )
    return rows
