import json
import struct

import pytest
import torch

from src.services.io import (
    decode_tensor,
    encode_tensor,
    load_checkpoint,
    load_tensor,
    save_checkpoint,
    save_tensor,
)
from src.services.io.tensor_file import manifest_path


class TestTensorFile:

    def test_layout(self):
        """Test magic, little-endian rank and dims, then f64 payload."""
        data = encode_tensor(torch.tensor([[1.0, 2.0, 3.0]], dtype=torch.float64))
        assert data[:4] == b"TSR1"
        assert struct.unpack_from("<3I", data, 4) == (2, 1, 3)
        assert struct.unpack_from("<3d", data, 16) == (1.0, 2.0, 3.0)

    def test_file_round_trip_is_exact(self, tmp_path, image):
        """Test that saved tensors are reloaded bit for bit."""
        path = tmp_path / "x.tsr"
        save_tensor(image / 3, path)
        assert torch.equal(load_tensor(path), image / 3)

    def test_scalar_rank_zero(self):
        """Test rank-0 tensors."""
        decoded = decode_tensor(encode_tensor(torch.tensor(2.5, dtype=torch.float64)))
        assert decoded.shape == ()
        assert decoded.item() == 2.5

    @pytest.mark.parametrize(
        "data, match",
        [
            (b"TSR2" + bytes(8), "magic"),
            (b"TSR1\x02\x00\x00\x00\x01\x00\x00\x00", "Truncated"),
            (b"TSR1\x01\x00\x00\x00\x02\x00\x00\x00" + bytes(8), "payload"),
        ],
    )
    def test_malformed(self, data, match):
        """Test that corrupt containers are rejected."""
        with pytest.raises(ValueError, match=match):
            decode_tensor(data)


class TestCheckpoint:

    def test_manifest_offsets(self, tmp_path):
        """Test that entries are laid out consecutively in one payload."""
        tensors = {
            "conv.weight": torch.ones(2, 3, dtype=torch.float64),
            "conv.bias": torch.arange(2, dtype=torch.float64),
        }
        path = tmp_path / "model.tsr"

        entries = save_checkpoint(tensors, path)

        assert entries == [
            {"name": "conv.weight", "offset": 0, "shape": [2, 3]},
            {"name": "conv.bias", "offset": 6, "shape": [2]},
        ]
        assert json.loads(manifest_path(path).read_text())["tensors"] == entries
        assert load_tensor(path).shape == (8,)

    def test_round_trip(self, tmp_path):
        """Test that a state dict survives save and load."""
        module = torch.nn.Conv2d(1, 2, 3).to(torch.float64)
        path = tmp_path / "model.tsr"
        save_checkpoint(module.state_dict(), path)

        restored = torch.nn.Conv2d(1, 2, 3).to(torch.float64)
        restored.load_state_dict(load_checkpoint(path))

        assert torch.equal(restored.weight, module.weight)
        assert torch.equal(restored.bias, module.bias)

    def test_manifest_beyond_payload(self, tmp_path):
        """Test that an inconsistent manifest is rejected."""
        path = tmp_path / "model.tsr"
        save_checkpoint({"w": torch.zeros(2, dtype=torch.float64)}, path)
        manifest_path(path).write_text(json.dumps({"tensors": [{"name": "w", "offset": 1, "shape": [2]}]}))
        with pytest.raises(ValueError, match="exceeds the payload"):
            load_checkpoint(path)

    def test_missing_manifest(self, tmp_path):
        """Test that the sidecar is required."""
        path = tmp_path / "model.tsr"
        save_tensor(torch.zeros(1, dtype=torch.float64), path)
        with pytest.raises(RuntimeError, match="manifest"):
            load_checkpoint(path)
