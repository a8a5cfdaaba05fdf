import argparse
import logging
from pathlib import Path

import torch

from src.commands.common import (
    EXIT_OK,
    FAMILY_ALIASES,
    add_model_arguments,
    add_seed_and_out,
    console,
    exit_code,
    model_from_args,
    parse_dist,
    parse_floats,
    render_report,
    render_rows,
    write_reports,
)
from src.configs.env_config import config
from src.models.noise_models import NEF_FAMILIES, NoiseFamily
from src.services.autodiff.suite import run_primitive_suite
from src.services.io import emit_csv, load_checkpoint, load_images, load_run_config
from src.services.l2r import Recorruptor, diagnostics, run_identity_suite, transport_agreement
from src.services.noise import noise_map
from src.services.samplers import RngStream
from src.services.splitting import check_moment_conditions, nef_split_validate
from src.services.sure import estimate_ak
from src.services.training import load_denoiser
from src.services.training.trainer import STREAM_VALIDATION, recorruptor_config

logger = logging.getLogger(__name__)

# Constants to avoid magic numbers
DEFAULT_MC = 1_000_000
DEFAULT_X_GRID = "0.25,0.5,0.75"
AK_COLUMNS = ["alpha", "estimate", "se"]
DIAG_COLUMNS = ["epoch", "c_eps", "c_h", "c_delta", "se_eps", "se_h", "spearman"]
TRANSPORT_GRID = torch.linspace(-3.0, 3.0, 61, dtype=torch.float64)


def _nef_models(args: argparse.Namespace):
    if args.model != "all":
        return [model_from_args(args)]
    models = []
    for family in sorted(NEF_FAMILIES, key=lambda f: f.value):
        args.model = family
        models.append(model_from_args(args))
    return models


def validate_nef_command(args: argparse.Namespace) -> int:
    """Monte Carlo audit of the NEF splitting identities."""
    rng = RngStream(args.seed, 0)
    reports = []
    for i, model in enumerate(_nef_models(args)):
        report = nef_split_validate(model, args.x, args.alpha, args.n, rng.child(i))
        render_report(report)
        reports.append(report)
    path = write_reports(reports, args.out, "validate_nef")
    console.print(f"Wrote {path}")
    return exit_code(all(report.passed for report in reports))


def check_moments_command(args: argparse.Namespace) -> int:
    """Check the n = 1 and n = 3 moment conditions of an auxiliary law."""
    report = check_moment_conditions(args.eps, args.omega, args.tau, args.n, RngStream(args.seed, 0))
    render_report(report)
    path = write_reports([report], args.out, "check_moments")
    console.print(f"Wrote {path}")
    return exit_code(report.passed)


def estimate_ak_command(args: argparse.Namespace) -> int:
    """Tabulate a_k along a decreasing alpha sequence and its extrapolated limit."""
    model = model_from_args(args)
    report = estimate_ak(model, args.y, args.k, args.alphas, args.n, RngStream(args.seed, 0))
    rows = [estimate.model_dump() for estimate in report.estimates]
    rows.append({"alpha": 0.0, "estimate": report.limit, "se": None})
    render_rows(f"a_{args.k} at y={args.y} for {model.describe()} (alpha=0: limit)", rows, AK_COLUMNS)
    path = emit_csv(rows, Path(args.out) / "estimate_ak.csv", AK_COLUMNS)
    console.print(f"Wrote {path}")
    return EXIT_OK


def diag_l2r_command(args: argparse.Namespace) -> int:
    """Equilibrium diagnostics of a trained denoiser and recorruptor pair."""
    cfg = load_run_config(args.config)
    if not cfg.noise.is_additive:
        raise ValueError(f"diag-l2r needs an additive noise model, got '{cfg.noise.family.value}'")
    out_dir = Path(args.out or cfg.data.out_dir)
    f = load_denoiser(args.checkpoint or out_dir / config.CHECKPOINT_NAME, cfg.denoiser, cfg.noise)
    h = Recorruptor(recorruptor_config(cfg))
    h.load_state_dict(load_checkpoint(args.recorruptor or out_dir / config.RECORRUPTOR_NAME))
    _, clean = load_images(args.data or cfg.data.val_dir)

    rng = RngStream(cfg.data.seed, STREAM_VALIDATION).child(args.epoch)
    record = diagnostics(f, h, noise_map(cfg.noise), clean, cfg.loss.tau, args.n_mc, rng, args.epoch)
    rho = transport_agreement(h, cfg.noise, TRANSPORT_GRID)
    row = {**record.model_dump(), "spearman": rho}
    render_rows(f"L2R diagnostics ({cfg.noise.describe()})", [row], DIAG_COLUMNS)
    console.print(f"learned kernel:\n{h.kernel.detach().numpy()}")
    path = emit_csv([row], out_dir / "diag_l2r.csv", DIAG_COLUMNS)
    console.print(f"Wrote {path}")
    return EXIT_OK


def selftest_command(args: argparse.Namespace) -> int:
    """Gradient checks of every primitive and the exact identity suites."""
    rng = RngStream(args.seed, 0)
    reports = [run_primitive_suite(rng.child(0)), run_identity_suite(rng.child(1))]
    for report in reports:
        render_report(report)
    path = write_reports(reports, args.out, "selftest")
    console.print(f"Wrote {path}")
    return exit_code(all(report.passed for report in reports))


def _nef_family(name: str):
    if name == "all":
        return name
    family = FAMILY_ALIASES.get(name) or NoiseFamily(name)
    if family not in NEF_FAMILIES:
        raise argparse.ArgumentTypeError(f"'{name}' is not an NEF family")
    return family


def register(subparsers: argparse._SubParsersAction) -> None:
    nef = subparsers.add_parser("validate-nef", help="audit the NEF splitting identities")
    add_model_arguments(nef, default="all", model_type=_nef_family)
    nef.add_argument("--alpha", type=float, default=0.5)
    nef.add_argument("--n", type=int, default=DEFAULT_MC, help="Monte Carlo samples per x")
    nef.add_argument("--x", type=parse_floats, default=parse_floats(DEFAULT_X_GRID))
    add_seed_and_out(nef)
    nef.set_defaults(handler=validate_nef_command)

    moments = subparsers.add_parser("check-moments", help="check the auxiliary moment conditions")
    moments.add_argument("--eps", type=parse_dist, required=True, help="e.g. laplace or normal:sigma=0.5")
    moments.add_argument("--omega", type=parse_dist, required=True)
    moments.add_argument("--tau", type=float, default=1.0)
    moments.add_argument("--n", type=int, default=DEFAULT_MC)
    add_seed_and_out(moments)
    moments.set_defaults(handler=check_moments_command)

    ak = subparsers.add_parser("estimate-ak", help="estimate a_k along an alpha sequence")
    add_model_arguments(ak)
    ak.add_argument("--y", type=float, default=0.5)
    ak.add_argument("--k", type=int, default=1)
    ak.add_argument("--alphas", type=parse_floats, default=parse_floats("0.2,0.1,0.05"))
    ak.add_argument("--n", type=int, default=DEFAULT_MC)
    add_seed_and_out(ak)
    ak.set_defaults(handler=estimate_ak_command)

    diag = subparsers.add_parser("diag-l2r", help="C_eps / C_h / C_delta of a trained run")
    diag.add_argument("--config", required=True)
    diag.add_argument("--checkpoint")
    diag.add_argument("--recorruptor")
    diag.add_argument("--data", help="clean images, defaults to [data] val_dir")
    diag.add_argument("--n-mc", type=int, default=16)
    diag.add_argument("--epoch", type=int, default=0, help="label and stream index of the record")
    diag.add_argument("--out")
    diag.set_defaults(handler=diag_l2r_command)

    selftest = subparsers.add_parser("selftest", help="gradient and identity suites")
    add_seed_and_out(selftest)
    selftest.set_defaults(handler=selftest_command)
