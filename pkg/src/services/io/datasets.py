import json
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
import torch
from scipy import ndimage

from src.models.noise_models import NoiseModel
from src.services.autodiff.primitives import DTYPE
from src.services.io.pgm import read_pgm, write_pgm
from src.services.io.tensor_file import load_tensor, save_tensor
from src.services.noise import corrupt
from src.services.samplers import RngStream

logger = logging.getLogger(__name__)

# Constants to avoid magic numbers
MIN_SIZE = 16
MANIFEST_NAME = "manifest.json"
# Clean intensities stay inside the support of every count family
INTENSITY_RANGE = (0.05, 0.95)
SMOOTHING_SIGMA = 1.0


def synthetic_image(size: int, rng: RngStream) -> np.ndarray:
    """Piecewise-smooth scene of a gradient, rectangles and Gaussian blobs in [0, 1]."""
    gen = rng.generator
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    angle = gen.uniform(0, 2 * np.pi)
    image = 0.5 + 0.3 * (np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5))

    for _ in range(gen.integers(2, 6)):
        top, left = gen.integers(0, size - 4, size=2)
        height, width = gen.integers(4, size // 2 + 1, size=2)
        image[top : top + height, left : left + width] = gen.uniform(0, 1)

    for _ in range(gen.integers(1, 4)):
        cy, cx = gen.uniform(0, 1, size=2)
        spread = gen.uniform(0.05, 0.2)
        amplitude = gen.uniform(-0.5, 0.5)
        image = image + amplitude * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * spread**2))

    image = ndimage.gaussian_filter(image, SMOOTHING_SIGMA, mode="reflect")
    low, high = image.min(), image.max()
    scaled = (image - low) / (high - low) if high > low else np.full_like(image, 0.5)
    lo, hi = INTENSITY_RANGE
    return lo + (hi - lo) * scaled


def _write_manifest(out_dir: Path, payload: dict) -> None:
    try:
        (out_dir / MANIFEST_NAME).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to write dataset manifest in {out_dir}: {e}")
        raise RuntimeError(f"Error while writing dataset manifest: {e}")


def gen_dataset(n_images: int, size: int, seed: int, out_dir: str | Path) -> List[Path]:
    """
    Generate synthetic grayscale images as 16-bit PGM files plus manifest.json.

    Args:
        n_images (int): Number of images, 0 writes an empty manifest
        size (int): Side length, at least 16
        seed (int): Master seed; image i uses stream (seed, i)
        out_dir (str | Path): Destination directory

    Raises:
        ValueError: If size is below 16 or n_images is negative
        RuntimeError: If the directory is not writable
    """
    if size < MIN_SIZE:
        raise ValueError(f"gen_dataset: size={size} must be >= {MIN_SIZE}")
    if n_images < 0:
        raise ValueError(f"gen_dataset: n_images={n_images} must be >= 0")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to create dataset directory {out_dir}: {e}")
        raise RuntimeError(f"Error while creating dataset directory: {e}")

    paths = []
    for i in range(n_images):
        path = out_dir / f"img_{i:05d}.pgm"
        write_pgm(path, synthetic_image(size, RngStream(seed, i)))
        paths.append(path)
    _write_manifest(
        out_dir, {"kind": "clean", "size": size, "seed": seed, "images": [p.name for p in paths]}
    )
    logger.info(f"Generated {n_images} images of size {size} in {out_dir}")
    return paths


def _listed_files(directory: Path, pattern: str) -> List[Path]:
    manifest = directory / MANIFEST_NAME
    if manifest.exists():
        try:
            names = json.loads(manifest.read_text(encoding="utf-8"))["images"]
        except (json.JSONDecodeError, KeyError) as e:
            raise ValueError(f"Invalid dataset manifest in {directory}: {e}")
        return [directory / name for name in names]
    return sorted(directory.glob(pattern))


def load_images(directory: str | Path) -> Tuple[List[str], torch.Tensor]:
    """
    Load a clean PGM dataset as names and a (N, 1, H, W) tensor.

    Raises:
        ValueError: If the directory holds no images or their shapes differ
    """
    directory = Path(directory)
    files = _listed_files(directory, "*.pgm")
    if not files:
        raise ValueError(f"load_images: no PGM images in {directory}")
    images = [read_pgm(path) for path in files]
    shapes = {tuple(image.shape) for image in images}
    if len(shapes) > 1:
        raise ValueError(f"load_images: mixed image shapes {sorted(shapes)} in {directory}")
    return [path.name for path in files], torch.stack(images).unsqueeze(1).to(DTYPE)


def corrupt_dataset(
    in_dir: str | Path, model: NoiseModel, seed: int, out_dir: str | Path
) -> List[Path]:
    """Corrupt every clean image of in_dir and store the noisy tensors as TSR1 files.

    Image i is corrupted with stream (seed, 0, i).
    """
    names, clean = load_images(in_dir)
    out_dir = Path(out_dir)
    stream = RngStream(seed, 0)
    paths = []
    for i, (name, image) in enumerate(zip(names, clean)):
        noisy = corrupt(image[0], model, stream.child(i))
        path = out_dir / f"{Path(name).stem}.tsr"
        save_tensor(noisy, path)
        paths.append(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(
        out_dir,
        {
            "kind": "noisy",
            "source": str(in_dir),
            "seed": seed,
            "model": model.model_dump(mode="json", exclude_none=True),
            "images": [p.name for p in paths],
        },
    )
    logger.info(f"Corrupted {len(paths)} images with {model.describe()} into {out_dir}")
    return paths


def load_noisy(directory: str | Path) -> Tuple[List[str], torch.Tensor]:
    """Load TSR1 noisy images written by corrupt_dataset as (N, 1, H, W)."""
    directory = Path(directory)
    files = _listed_files(directory, "*.tsr")
    if not files:
        raise ValueError(f"load_noisy: no tensor files in {directory}")
    return [path.name for path in files], torch.stack([load_tensor(p) for p in files]).unsqueeze(1)
