import logging
from typing import List, Sequence, Tuple, Union

import numpy as np
import torch

from src.services.autodiff.primitives import DTYPE

logger = logging.getLogger(__name__)

# 64-bit seeds and stream ids
MAX_WORD = 2**64 - 1


class RngStream:
    """Counter-based random stream keyed by (seed, stream id).

    Philox is a counter-based generator, so children derived from the same key
    path are reproducible and independent without any coordination.
    """

    def __init__(self, seed: int, stream_id: Union[int, Sequence[int]] = 0):
        path: Tuple[int, ...] = (
            (int(stream_id),) if np.isscalar(stream_id) else tuple(int(s) for s in stream_id)
        )
        for word in (seed, *path):
            if not 0 <= int(word) <= MAX_WORD:
                raise ValueError(f"RngStream: {word} is not an unsigned 64-bit integer")
        self.seed = int(seed)
        self.path = path
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    @property
    def stream_id(self) -> int:
        return self.path[-1]

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, (*self.path, index))

    def spawn(self, n: int) -> List["RngStream"]:
        """Pre-split n independent child streams for parallel work."""
        return [self.child(i) for i in range(n)]

    def standard_normal(self, shape) -> torch.Tensor:
        return torch.from_numpy(self.generator.standard_normal(size=tuple(shape))).to(DTYPE)

    def rademacher(self, shape) -> torch.Tensor:
        signs = self.generator.integers(0, 2, size=tuple(shape)) * 2 - 1
        return torch.from_numpy(signs.astype(np.float64))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def torch_seed(self) -> int:
        """A seed for torch.manual_seed drawn from this stream."""
        return int(self.generator.integers(0, 2**63 - 1))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path})"
