import numpy as np
import pytest

from hatc.image import as_image, read_pgm, write_pgm


def test_pgm_round_trip(tmp_path, test_image):
    path = tmp_path / "img.pgm"
    write_pgm(path, test_image)
    back = read_pgm(path)
    assert np.array_equal(back, test_image)


def test_pgm_header(tmp_path):
    img = np.arange(64, dtype=np.uint8).reshape(8, 8)
    path = tmp_path / "a.pgm"
    write_pgm(path, img)
    raw = path.read_bytes()
    assert raw.startswith(b"P5")
    assert b"8 8" in raw and b"255" in raw


def test_pgm_rejects_garbage(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(Exception):
        read_pgm(path)


def test_as_image_validation():
    assert as_image(np.zeros((4, 4), dtype=np.int64)).dtype == np.uint8
    with pytest.raises(ValueError):
        as_image(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        as_image(np.full((4, 4), 300, dtype=np.int64))
    with pytest.raises(ValueError):
        as_image(np.zeros((4, 4), dtype=np.float64))
