import numpy as np
import pytest

from stackiqa.pairset import image_from_array


def write_pgm(path, arr):
    """Binary PGM (P5) writer for small grayscale test images."""
    arr = np.asarray(arr, dtype=np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(arr.tobytes())


def write_ppm(path, arr):
    """Binary PPM (P6) writer for small RGB test images."""
    arr = np.asarray(arr, dtype=np.uint8)
    h, w, _ = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(arr.tobytes())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, h=32, w=32, channels=1):
    shape = (h, w) if channels == 1 else (h, w, channels)
    return image_from_array(rng.integers(0, 256, size=shape, dtype=np.uint8))
