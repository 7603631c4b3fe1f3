import numpy as np
import pytest

from hatc.corpus import make_corpus, make_training_images
from hatc.training import train_from_images

CORPUS_SEED = 7
DETECTOR_THRESHOLD = 70


@pytest.fixture(scope="session")
def corpus():
    """The full bundled mini-corpus (20 objects, 5 views + 1 query each)."""
    return make_corpus(CORPUS_SEED)


@pytest.fixture(scope="session")
def small_corpus():
    """A cut-down corpus for fast functional tests."""
    return make_corpus(CORPUS_SEED, n_objects=4, views=2)


@pytest.fixture(scope="session")
def training_images():
    return make_training_images(CORPUS_SEED, 10)


@pytest.fixture(scope="session")
def models(training_images):
    """Trained coding models keyed by quality bucket ('intra' for ATC)."""
    out = {
        q: train_from_images(training_images, "residual", q, DETECTOR_THRESHOLD)
        for q in (10, 50, 70)
    }
    out["intra"] = train_from_images(training_images, "intra", 0, DETECTOR_THRESHOLD)
    return out


@pytest.fixture(scope="session")
def test_image():
    """A deterministic structured image with texture at several scales."""
    rng = np.random.default_rng(1234)
    img = np.zeros((64, 64), dtype=np.float64) + 128
    img += 40 * np.sin(np.linspace(0, 6, 64))[None, :]
    img[10:30, 10:30] = 220
    img[40:56, 36:60] = 40
    yy, xx = np.mgrid[0:12, 0:12]
    img[44:56, 8:20] = ((yy // 2 + xx // 2) % 2) * 150 + 50
    img += rng.uniform(-10, 10, img.shape)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)
