import numpy as np
import pytest

from vggmetric.errors import FormatError
from vggmetric.ppm import read_pgm16, read_ppm, write_pgm16, write_ppm


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(13, 17, 3), dtype=np.uint8)
    path = tmp_path / "img.ppm"
    write_ppm(path, img)
    assert np.array_equal(read_ppm(path), img)


def test_ppm_header_comment(tmp_path):
    path = tmp_path / "c.ppm"
    path.write_bytes(b"P6\n# a comment\n2 1\n255\n" + bytes(6))
    img = read_ppm(path)
    assert img.shape == (1, 2, 3)
    assert (img == 0).all()


def test_ppm_bad_magic(tmp_path):
    path = tmp_path / "bad.ppm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes(12))
    with pytest.raises(FormatError):
        read_ppm(path)


def test_ppm_truncated(tmp_path):
    path = tmp_path / "short.ppm"
    path.write_bytes(b"P6\n4 4\n255\n" + bytes(10))
    with pytest.raises(FormatError):
        read_ppm(path)


def test_pgm16_round_trip_scale(tmp_path):
    values = np.array([[0.0, 1.0], [2.0, 4.0]])
    path = tmp_path / "map.pgm"
    scale = write_pgm16(path, values)
    stored = read_pgm16(path)
    assert stored.dtype == np.uint16
    recovered = stored.astype(np.float64) * scale
    assert np.abs(recovered - values).max() <= scale  # half-count rounding
    assert float((tmp_path / "map.pgm.scale.txt").read_text()) == scale


def test_pgm16_zero_map(tmp_path):
    path = tmp_path / "zero.pgm"
    scale = write_pgm16(path, np.zeros((3, 3)))
    assert scale == 1.0
    assert (read_pgm16(path) == 0).all()
