import argparse
import logging
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

from rich.console import Console
from rich.table import Table

from src.configs.env_config import config
from src.models.noise_models import DistFamily, DistSpec, NoiseFamily, NoiseModel
from src.models.report_models import REPORT_COLUMNS, Report
from src.services.io import emit_csv

logger = logging.getLogger(__name__)

console = Console()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# Short names accepted by --model
FAMILY_ALIASES: Dict[str, NoiseFamily] = {
    "gaussian": NoiseFamily.ADDITIVE_GAUSSIAN,
    "laplace": NoiseFamily.ADDITIVE_LAPLACE,
    "log_gamma": NoiseFamily.ADDITIVE_LOG_GAMMA,
    "correlated": NoiseFamily.CORRELATED_GAUSSIAN,
    "poisson": NoiseFamily.POISSON,
    "gamma": NoiseFamily.GAMMA,
    "binomial": NoiseFamily.BINOMIAL,
    "bernoulli": NoiseFamily.BERNOULLI_MASK,
    "pg": NoiseFamily.POISSON_GAUSSIAN,
}

# Parameters used when --model is given without them
MODEL_DEFAULTS: Dict[NoiseFamily, dict] = {
    NoiseFamily.ADDITIVE_GAUSSIAN: {"sigma": 0.1},
    NoiseFamily.ADDITIVE_LAPLACE: {"b": 0.1 * 0.5**0.5},
    NoiseFamily.ADDITIVE_LOG_GAMMA: {"ell": 1.0, "sigma": 0.1},
    NoiseFamily.CORRELATED_GAUSSIAN: {"sigma": 0.1},
    NoiseFamily.POISSON: {"gamma": 0.05},
    NoiseFamily.GAMMA: {"ell": 10.0},
    NoiseFamily.BINOMIAL: {"n_trials": 20},
    NoiseFamily.BERNOULLI_MASK: {"p0": 0.8},
    NoiseFamily.POISSON_GAUSSIAN: {"gamma": 0.05, "sigma": 0.02},
}

# Unit-variance defaults for --eps / --omega laws
DIST_DEFAULTS: Dict[DistFamily, dict] = {
    DistFamily.NORMAL: {"sigma": 1.0},
    DistFamily.LAPLACE: {"b": 0.5**0.5},
    DistFamily.RADEMACHER: {},
    DistFamily.GAMMA: {"shape": 1.0, "scale": 1.0},
    DistFamily.POISSON: {"lam": 1.0},
    DistFamily.BETA: {"a": 1.0, "b": 1.0},
    DistFamily.BERNOULLI: {"p": 0.5},
    DistFamily.BINOMIAL: {"n": 1, "p": 0.5},
}


def parse_family(name: str) -> NoiseFamily:
    if name in FAMILY_ALIASES:
        return FAMILY_ALIASES[name]
    try:
        return NoiseFamily(name)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown noise family '{name}', choose from {sorted(FAMILY_ALIASES)}"
        )


def parse_dist(text: str) -> DistSpec:
    """'laplace' or 'normal:sigma=0.5,mu=0' into a DistSpec."""
    name, _, params = text.partition(":")
    try:
        family = DistFamily(name)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown distribution '{name}'")
    values = dict(DIST_DEFAULTS.get(family, {}))
    for item in filter(None, params.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected key=value in '{item}'")
        values[key.strip()] = float(value)
    try:
        return DistSpec(family=family, **values)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def parse_floats(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def add_model_arguments(
    parser: argparse.ArgumentParser,
    default: Optional[str] = None,
    model_type: Callable[[str], object] = parse_family,
) -> None:
    group = parser.add_argument_group("noise model")
    group.add_argument("--model", type=model_type, required=default is None, default=default)
    group.add_argument("--sigma", type=float)
    group.add_argument("--b", type=float)
    group.add_argument("--ell", type=float)
    group.add_argument("--gamma", type=float)
    group.add_argument("--n-trials", type=int)
    group.add_argument("--p0", type=float)


def model_from_args(args: argparse.Namespace) -> NoiseModel:
    family = args.model if isinstance(args.model, NoiseFamily) else parse_family(args.model)
    params = {
        "sigma": args.sigma,
        "b": args.b,
        "ell": args.ell,
        "gamma": args.gamma,
        "n_trials": args.n_trials,
        "p0": args.p0,
    }
    values = dict(MODEL_DEFAULTS.get(family, {}))
    values.update({k: v for k, v in params.items() if v is not None})
    return NoiseModel(family=family, **values)


def add_seed_and_out(parser: argparse.ArgumentParser, out_default: Optional[str] = None) -> None:
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    parser.add_argument("--out", default=out_default or config.OUTPUT_DIR)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_report(report: Report) -> None:
    table = Table(title=report.title)
    for column in REPORT_COLUMNS:
        table.add_column(column, justify="left" if column == "name" else "right")
    for record in report.to_records():
        table.add_row(*(_fmt(record[column]) for column in REPORT_COLUMNS))
    console.print(table)
    for note in report.notes:
        console.print(f"[dim]note:[/dim] {note}")
    for warning in report.warnings:
        console.print(f"[yellow]warning:[/yellow] {warning}")
    status = "[green]PASS[/green]" if report.passed else "[red]FAIL[/red]"
    console.print(f"{report.title}: {status}")


def render_rows(title: str, rows: Iterable[dict], columns: List[str]) -> None:
    table = Table(title=title)
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*(_fmt(row[column]) for column in columns))
    console.print(table)


def write_reports(reports: List[Report], out_dir: str | Path, name: str) -> Path:
    records = []
    for report in reports:
        for record in report.to_records():
            records.append({**record, "name": f"{report.title}: {record['name']}"})
    return emit_csv(records, Path(out_dir) / f"{name}.csv", REPORT_COLUMNS)


def exit_code(passed: bool) -> int:
    return EXIT_OK if passed else EXIT_FAILED
