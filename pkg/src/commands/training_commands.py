import argparse
import logging
from pathlib import Path

from src.commands.common import EXIT_OK, console, render_rows
from src.configs.env_config import config
from src.models.training_models import EVALUATION_COLUMNS, HISTORY_COLUMNS, ImageSet
from src.services.io import emit_csv, load_noisy, load_run_config
from src.services.training import build_image_set, evaluate, run_streams, train

logger = logging.getLogger(__name__)


def train_command(args: argparse.Namespace) -> int:
    """Train a denoiser from a run-config file."""
    cfg = load_run_config(args.config)
    if args.out:
        cfg.data.out_dir = args.out
    run = train(cfg, show_progress=not args.no_progress)
    tail = [record.to_record() for record in run.history[-5:]]
    render_rows(f"{cfg.loss.kind.value} training (last epochs)", tail, HISTORY_COLUMNS)
    console.print(f"History: {run.history_csv}\nCheckpoint: {run.checkpoint}")
    return EXIT_OK


def eval_command(args: argparse.Namespace) -> int:
    """Evaluate a checkpoint on the validation images of a run config."""
    cfg = load_run_config(args.config)
    out_dir = Path(args.out or cfg.data.out_dir)
    checkpoint = args.checkpoint or out_dir / config.CHECKPOINT_NAME
    data_dir = args.data or cfg.data.val_dir
    # same stream the trainer uses for its validation set
    dataset = build_image_set(data_dir, cfg.noise, run_streams(cfg.data.seed)["corruption"].child(1))
    if args.noisy:
        names, noisy = load_noisy(args.noisy)
        if len(names) != len(dataset.names):
            raise ValueError(f"{len(names)} noisy images for {len(dataset.names)} clean images")
        dataset = ImageSet(names=dataset.names, clean=dataset.clean, noisy=noisy)
    rows = [row.model_dump() for row in evaluate(checkpoint, dataset, cfg.denoiser, cfg.noise)]
    path = emit_csv(rows, out_dir / "evaluation.csv", EVALUATION_COLUMNS)
    render_rows(f"evaluation of {checkpoint}", rows, EVALUATION_COLUMNS)
    console.print(f"Wrote {path}")
    return EXIT_OK


def register(subparsers: argparse._SubParsersAction) -> None:
    train_parser = subparsers.add_parser("train", help="train a denoiser")
    train_parser.add_argument("--config", required=True, help="run-config file")
    train_parser.add_argument("--out", help="override [data] out_dir")
    train_parser.add_argument("--no-progress", action="store_true", help="hide the progress bar")
    train_parser.set_defaults(handler=train_command)

    eval_parser = subparsers.add_parser("eval", help="evaluate a trained denoiser")
    eval_parser.add_argument("--config", required=True, help="run-config file")
    eval_parser.add_argument("--checkpoint", help="weights file, defaults to the run's checkpoint")
    eval_parser.add_argument("--data", help="clean image directory, defaults to [data] val_dir")
    eval_parser.add_argument("--noisy", help="noisy tensors written by 'corrupt'")
    eval_parser.add_argument("--out", help="output directory, defaults to [data] out_dir")
    eval_parser.set_defaults(handler=eval_command)
