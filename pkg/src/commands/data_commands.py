import argparse
import logging

from src.commands.common import (
    EXIT_OK,
    add_model_arguments,
    add_seed_and_out,
    console,
    model_from_args,
)
from src.services.io import corrupt_dataset, gen_dataset

logger = logging.getLogger(__name__)


def gen_command(args: argparse.Namespace) -> int:
    """Generate a synthetic clean dataset."""
    paths = gen_dataset(args.n, args.size, args.seed, args.out)
    console.print(f"Wrote {len(paths)} images of size {args.size} to {args.out}")
    return EXIT_OK


def corrupt_command(args: argparse.Namespace) -> int:
    """Corrupt a clean dataset with the requested noise law."""
    model = model_from_args(args)
    paths = corrupt_dataset(args.input, model, args.seed, args.out)
    console.print(f"Wrote {len(paths)} noisy tensors ({model.describe()}) to {args.out}")
    return EXIT_OK


def register(subparsers: argparse._SubParsersAction) -> None:
    gen = subparsers.add_parser("gen", help="generate synthetic clean images")
    gen.add_argument("--n", type=int, required=True, help="number of images")
    gen.add_argument("--size", type=int, default=64, help="image side length")
    add_seed_and_out(gen)
    gen.set_defaults(handler=gen_command)

    corrupt = subparsers.add_parser("corrupt", help="corrupt a clean dataset")
    corrupt.add_argument("--in", dest="input", required=True, help="clean dataset directory")
    add_model_arguments(corrupt)
    add_seed_and_out(corrupt)
    corrupt.set_defaults(handler=corrupt_command)
