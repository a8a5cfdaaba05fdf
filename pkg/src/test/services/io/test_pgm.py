import numpy as np
import pytest

from src.services.io import quantize, read_levels, read_pgm, write_pgm


class TestQuantize:

    def test_round_half_up(self):
        """Test that exact half levels round up."""
        levels = quantize(np.array([[0.5, 0.0, 1.0]]), maxval=255)
        assert levels.tolist() == [[128, 0, 255]]
        assert levels.dtype == np.uint8

    def test_clips_out_of_range(self):
        """Test that values outside [0, 1] are clipped."""
        levels = quantize(np.array([[-0.2, 1.3]]))
        assert levels.tolist() == [[0, 65535]]
        assert levels.dtype == np.uint16


class TestPgm:

    @pytest.mark.parametrize("maxval", [255, 65535])
    def test_levels_round_trip(self, tmp_path, image, maxval):
        """Test that written levels are read back bit-exactly."""
        path = tmp_path / "img.pgm"
        write_pgm(path, image, maxval)

        levels, read_maxval = read_levels(path)

        assert read_maxval == maxval
        assert np.array_equal(levels, quantize(image, maxval))

    def test_header_layout(self, tmp_path):
        """Test the P5 header and big-endian 16-bit samples."""
        path = tmp_path / "img.pgm"
        write_pgm(path, np.array([[0.0, 1.0, 0.5]]))
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 1\n65535\n")
        assert data[-6:] == b"\x00\x00\xff\xff\x80\x00"

    def test_read_scales_to_unit_interval(self, tmp_path, image):
        """Test that read_pgm returns levels / maxval as float64."""
        path = tmp_path / "img.pgm"
        write_pgm(path, image)
        values = read_pgm(path)
        assert values.shape == (16, 16)
        assert float((values - image).abs().max()) <= 0.5 / 65535 + 1e-15

    def test_comment_in_header(self, tmp_path):
        """Test that header comments are skipped."""
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
        levels, maxval = read_levels(path)
        assert levels.tolist() == [[0, 255]]
        assert maxval == 255

    @pytest.mark.parametrize(
        "data, match",
        [
            (b"P2\n1 1\n255\n\x00", "magic"),
            (b"P5\n2 2\n255\n\x00", "raster"),
            (b"P5\n2 2", "truncated"),
        ],
    )
    def test_malformed_files(self, tmp_path, data, match):
        """Test that malformed files raise ValueError."""
        path = tmp_path / "bad.pgm"
        path.write_bytes(data)
        with pytest.raises(ValueError, match=match):
            read_levels(path)

    def test_missing_file(self, tmp_path):
        """Test that unreadable files raise RuntimeError."""
        with pytest.raises(RuntimeError, match="reading PGM"):
            read_pgm(tmp_path / "missing.pgm")

    def test_rejects_3d(self, tmp_path):
        """Test that only 2-D images can be written."""
        with pytest.raises(ValueError, match="2-D"):
            write_pgm(tmp_path / "x.pgm", np.zeros((1, 2, 2)))

    def test_rejects_maxval(self, tmp_path):
        """Test the supported bit depths."""
        with pytest.raises(ValueError, match="maxval"):
            write_pgm(tmp_path / "x.pgm", np.zeros((2, 2)), maxval=1023)
