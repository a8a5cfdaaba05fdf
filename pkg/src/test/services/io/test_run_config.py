import pytest

from src.models.noise_models import NoiseFamily
from src.models.training_models import LossKind
from src.services.io import (
    load_run_config,
    parse_run_config,
    save_run_config,
    serialize_run_config,
)

RUN_CONFIG = """
[data]
train_dir = data/train
val_dir = data/val
out_dir = runs/l2r
seed = 3

[model]
family = correlated_gaussian
sigma = 0.1
kernel = 0,0.5,0; 0.5,1,0.5; 0,0.5,0

[loss]
kind = l2r
tau = 0.5

[recorruptor]
kernel_size = 3
joint = false

[optim]
epochs = 10
batch_size = 4
"""


class TestParseRunConfig:

    def test_sections(self):
        """Test that each section lands in its model."""
        cfg = parse_run_config(RUN_CONFIG)

        assert cfg.data.seed == 3
        assert cfg.noise.family == NoiseFamily.CORRELATED_GAUSSIAN
        assert cfg.noise.kernel[1] == [0.5, 1.0, 0.5]
        assert cfg.loss.kind == LossKind.L2R
        assert cfg.loss.tau == 0.5
        assert cfg.recorruptor.joint is False
        assert cfg.optim.epochs == 10
        assert cfg.denoiser.channels == 16

    def test_serialize_is_a_fixed_point(self):
        """Test that parse and serialize agree after one pass."""
        text = serialize_run_config(parse_run_config(RUN_CONFIG))
        assert serialize_run_config(parse_run_config(text)) == text
        assert parse_run_config(text) == parse_run_config(RUN_CONFIG)

    def test_unknown_key_names_section(self):
        """Test that a misspelled key reports its section."""
        with pytest.raises(ValueError, match=r"section \[loss\]"):
            parse_run_config(RUN_CONFIG.replace("tau = 0.5", "tua = 0.5"))

    def test_unknown_section(self):
        """Test that extra sections are rejected."""
        with pytest.raises(ValueError, match="unknown sections"):
            parse_run_config(RUN_CONFIG + "\n[scheduler]\nwarmup = 1\n")

    def test_bad_kernel(self):
        """Test that non-numeric kernel rows are reported."""
        with pytest.raises(ValueError, match="kernel"):
            parse_run_config(RUN_CONFIG.replace("0,0.5,0; 0.5", "0,x,0; 0.5"))

    def test_missing_data_section(self):
        """Test that [data] is required."""
        text = RUN_CONFIG.split("[model]")[1]
        with pytest.raises(ValueError, match="Invalid run config"):
            parse_run_config("[model]" + text)

    def test_sure_rejects_correlated_noise(self):
        """Test that SURE training refuses correlated_gaussian noise."""
        with pytest.raises(ValueError, match="needs additive_gaussian"):
            parse_run_config(RUN_CONFIG.replace("kind = l2r", "kind = sure"))

    def test_duplicate_key(self):
        """Test that malformed INI text is reported as a ValueError."""
        with pytest.raises(ValueError, match="Invalid run config"):
            parse_run_config(RUN_CONFIG.replace("tau = 0.5", "tau = 0.5\ntau = 1.0"))


class TestRunConfigFiles:

    def test_save_and_load(self, tmp_path):
        """Test that a saved config loads back equal."""
        cfg = parse_run_config(RUN_CONFIG)
        path = save_run_config(cfg, tmp_path / "nested" / "run.cfg")
        assert load_run_config(path) == cfg

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file raises RuntimeError."""
        with pytest.raises(RuntimeError, match="reading run config"):
            load_run_config(tmp_path / "missing.cfg")
