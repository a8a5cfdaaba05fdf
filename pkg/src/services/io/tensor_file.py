import json
import logging
import struct
from pathlib import Path
from typing import Dict, List

import numpy as np
import torch

from src.services.autodiff.primitives import DTYPE

logger = logging.getLogger(__name__)

MAGIC = b"TSR1"
MANIFEST_SUFFIX = ".manifest.json"


def encode_tensor(tensor: torch.Tensor) -> bytes:
    """TSR1 bytes: magic, u32 LE rank, u32 LE dims, f64 LE payload row-major."""
    values = tensor.detach().cpu().to(DTYPE).contiguous().numpy()
    header = MAGIC + struct.pack(f"<I{values.ndim}I", values.ndim, *values.shape)
    return header + values.astype("<f8").tobytes()


def decode_tensor(data: bytes, source: str = "<bytes>") -> torch.Tensor:
    if data[:4] != MAGIC:
        raise ValueError(f"Invalid tensor file magic in {source}: {data[:4]!r}")
    if len(data) < 8:
        raise ValueError(f"Truncated tensor header in {source}")
    (rank,) = struct.unpack_from("<I", data, 4)
    header_size = 8 + 4 * rank
    if len(data) < header_size:
        raise ValueError(f"Truncated tensor header in {source}: rank {rank}")
    dims = struct.unpack_from(f"<{rank}I", data, 8)
    count = int(np.prod(dims, dtype=np.int64))
    payload = data[header_size:]
    if len(payload) != 8 * count:
        raise ValueError(
            f"Tensor file {source}: payload has {len(payload)} bytes, dims {dims} need {8 * count}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
    return torch.from_numpy(values).to(DTYPE)


def save_tensor(tensor: torch.Tensor, path: str | Path) -> None:
    """
    Write one tensor in the TSR1 container.

    Raises:
        RuntimeError: If the file cannot be written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_bytes(encode_tensor(tensor))
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to write tensor file {path}: {e}")
        raise RuntimeError(f"Error while writing tensor file: {e}")


def load_tensor(path: str | Path) -> torch.Tensor:
    path = Path(path)
    try:
        data = path.read_bytes()
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to read tensor file {path}: {e}")
        raise RuntimeError(f"Error while reading tensor file: {e}")
    return decode_tensor(data, str(path))


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + MANIFEST_SUFFIX)


def save_checkpoint(tensors: Dict[str, torch.Tensor], path: str | Path) -> List[dict]:
    """
    Save named tensors as one rank-1 TSR1 payload plus a JSON manifest sidecar.

    Args:
        tensors (Dict[str, torch.Tensor]): Named tensors, e.g. a state_dict
        path (str | Path): Payload file; the manifest goes to `<path>.manifest.json`

    Returns:
        List[dict]: Manifest entries (name, offset, shape), offsets in elements
    """
    entries, chunks, offset = [], [], 0
    for name, tensor in tensors.items():
        flat = tensor.detach().cpu().to(DTYPE).reshape(-1)
        entries.append({"name": name, "offset": offset, "shape": list(tensor.shape)})
        chunks.append(flat)
        offset += flat.numel()
    payload = torch.cat(chunks) if chunks else torch.zeros(0, dtype=DTYPE)
    save_tensor(payload, path)
    try:
        manifest_path(path).write_text(json.dumps({"tensors": entries}, indent=2), encoding="utf-8")
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to write manifest for {path}: {e}")
        raise RuntimeError(f"Error while writing checkpoint manifest: {e}")
    logger.info(f"Saved checkpoint {path} with {len(entries)} tensors, {offset} values")
    return entries


def load_checkpoint(path: str | Path) -> Dict[str, torch.Tensor]:
    """
    Load named tensors written by save_checkpoint.

    Raises:
        RuntimeError: If either file cannot be read
        ValueError: If the manifest is malformed or disagrees with the payload
    """
    payload = load_tensor(path)
    sidecar = manifest_path(path)
    try:
        with sidecar.open("r", encoding="utf-8") as f:
            try:
                entries = json.load(f)["tensors"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueError(f"Invalid checkpoint manifest {sidecar}: {e}")
    except (PermissionError, IOError, OSError) as e:
        logger.error(f"Failed to read manifest {sidecar}: {e}")
        raise RuntimeError(f"Error while reading checkpoint manifest: {e}")

    tensors = {}
    for entry in entries:
        size = int(np.prod(entry["shape"], dtype=np.int64))
        start = entry["offset"]
        if start + size > payload.numel():
            raise ValueError(f"Checkpoint {path}: entry '{entry['name']}' exceeds the payload")
        tensors[entry["name"]] = payload[start : start + size].reshape(entry["shape"]).clone()
    return tensors
