import logging
from pathlib import Path

import numpy as np
import torch

from src.services.autodiff.primitives import DTYPE

logger = logging.getLogger(__name__)

MAGIC = b"P5"
MAXVAL_8 = 255
MAXVAL_16 = 65535


def quantize(image, maxval: int = MAXVAL_16) -> np.ndarray:
    """Map [0, 1] reals to integer levels by round-half-up, clipping outside values."""
    values = image.detach().cpu().numpy() if isinstance(image, torch.Tensor) else np.asarray(image)
    values = np.asarray(values, dtype=np.float64)
    outside = int(((values < 0) | (values > 1)).sum())
    if outside:
        logger.warning(f"quantize: clipping {outside} pixels outside [0, 1]")
    levels = np.floor(np.clip(values, 0.0, 1.0) * maxval + 0.5)
    return levels.astype(np.uint16 if maxval > MAXVAL_8 else np.uint8)


def write_pgm(path: str | Path, image, maxval: int = MAXVAL_16) -> None:
    """
    Write a 2-D image with values in [0, 1] as binary PGM.

    Args:
        path (str | Path): Destination file
        image: Array or tensor of shape (H, W)
        maxval (int): 255 or 65535; 16-bit samples are big-endian

    Raises:
        ValueError: If the image is not 2-D or maxval is unsupported
        RuntimeError: If the file cannot be written
    """
    if maxval not in (MAXVAL_8, MAXVAL_16):
        raise ValueError(f"write_pgm: maxval must be {MAXVAL_8} or {MAXVAL_16}, got {maxval}")
    levels = quantize(image, maxval)
    if levels.ndim != 2:
        raise ValueError(f"write_pgm: need a 2-D image, got shape {levels.shape}")
    height, width = levels.shape
    header = b"%s\n%d %d\n%d\n" % (MAGIC, width, height, maxval)
    payload = levels.astype(">u2").tobytes() if maxval > MAXVAL_8 else levels.tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_bytes(header + payload)
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to write PGM {path}: {e}")
        raise RuntimeError(f"Error while writing PGM file: {e}")


def _header_tokens(data: bytes, count: int):
    """Yield `count` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("read_pgm: truncated header")
        if data[pos : pos + 1] == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise ValueError("read_pgm: truncated header")
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_levels(path: str | Path) -> tuple[np.ndarray, int]:
    """Integer samples of a binary PGM and its maxval."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to read PGM {path}: {e}")
        raise RuntimeError(f"Error while reading PGM file: {e}")

    tokens, offset = _header_tokens(data, 4)
    if tokens[0] != MAGIC:
        raise ValueError(f"Invalid PGM magic in {path}: {tokens[0]!r}")
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError as e:
        raise ValueError(f"Invalid PGM header in {path}: {e}")
    if not 0 < maxval <= MAXVAL_16:
        raise ValueError(f"Invalid PGM maxval in {path}: {maxval}")
    dtype = np.dtype(">u2") if maxval > MAXVAL_8 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = data[offset:]
    if len(raster) != expected:
        raise ValueError(f"PGM {path}: raster has {len(raster)} bytes, header declares {expected}")
    levels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return levels, maxval


def read_pgm(path: str | Path) -> torch.Tensor:
    """Read a binary PGM as a float64 (H, W) tensor scaled to [0, 1]."""
    levels, maxval = read_levels(path)
    return torch.from_numpy(levels.astype(np.float64) / maxval).to(DTYPE)
