import configparser
import logging
from pathlib import Path
from typing import Dict, Optional

from pydantic import BaseModel, ValidationError

from src.models.noise_models import NoiseModel
from src.models.training_models import (
    DataSection,
    DenoiserSection,
    LossSection,
    OptimSection,
    RecorruptorSection,
    RunConfig,
)

logger = logging.getLogger(__name__)

# section name in the text file -> RunConfig field
SECTIONS: Dict[str, str] = {
    "data": "data",
    "model": "noise",
    "denoiser": "denoiser",
    "loss": "loss",
    "recorruptor": "recorruptor",
    "optim": "optim",
}
SECTION_MODELS: Dict[str, type[BaseModel]] = {
    "data": DataSection,
    "model": NoiseModel,
    "denoiser": DenoiserSection,
    "loss": LossSection,
    "recorruptor": RecorruptorSection,
    "optim": OptimSection,
}


def _parse_kernel(text: str):
    rows = [row for row in text.split(";") if row.strip()]
    try:
        return [[float(value) for value in row.split(",")] for row in rows]
    except ValueError as e:
        raise ValueError(f"[model] kernel: expected ';'-separated rows of ',' values: {e}")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ";".join(",".join(repr(float(v)) for v in row) for row in value)
    return str(value)


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    """
    Parse the flat run-config text into a validated RunConfig.

    Raises:
        ValueError: Unknown section or key, bad value, or inconsistent settings
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ValueError(f"Invalid run config {source}: {e}")

    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ValueError(f"Invalid run config {source}: unknown sections {unknown}")

    sections = {}
    for name, model in SECTION_MODELS.items():
        if not parser.has_section(name):
            continue
        values = dict(parser.items(name))
        if name == "model" and "kernel" in values:
            values["kernel"] = _parse_kernel(values["kernel"])
        try:
            sections[SECTIONS[name]] = model.model_validate(values)
        except ValidationError as e:
            raise ValueError(f"Invalid run config {source}, section [{name}]: {e}")
    try:
        return RunConfig(**sections)
    except ValidationError as e:
        raise ValueError(f"Invalid run config {source}: {e}")


def serialize_run_config(cfg: RunConfig) -> str:
    lines = []
    for name, field in SECTIONS.items():
        section: BaseModel = getattr(cfg, field)
        lines.append(f"[{name}]")
        for key, value in section.model_dump(mode="json", exclude_none=True).items():
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to read run config {path}: {e}")
        raise RuntimeError(f"Error while reading run config: {e}")
    return parse_run_config(text, str(path))


def save_run_config(cfg: RunConfig, path: str | Path) -> Optional[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(serialize_run_config(cfg), encoding="utf-8")
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to write run config {path}: {e}")
        raise RuntimeError(f"Error while writing run config: {e}")
    return path
