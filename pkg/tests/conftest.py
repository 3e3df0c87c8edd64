import numpy as np
import pytest

from vggmetric.tensor import ConvParams
from vggmetric.vgg import CHANNELS, VggWeights


def make_synthetic_vgg(seed: int = 0) -> VggWeights:
    """Random weights at He scale so activations stay O(1) through 13 layers."""
    rng = np.random.default_rng(seed)
    layers = []
    prev = 3
    for ch in CHANNELS:
        fan_in = prev * 9
        kernel = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(ch, prev, 3, 3)).astype(np.float32)
        bias = rng.normal(0.0, 0.05, size=ch).astype(np.float32)
        layers.append(ConvParams(kernel=kernel, bias=bias))
        prev = ch
    return VggWeights(layers=tuple(layers))


def random_image(rng, h: int, w: int) -> np.ndarray:
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def textured_image(h: int = 64, w: int = 64, seed: int = 5) -> np.ndarray:
    """Mix of gradients, sinusoids and noise; gives JPEG something to quantize."""
    yy, xx = np.mgrid[0:h, 0:w]
    base = 128 + 60 * np.sin(xx / 3.0) * np.cos(yy / 5.0) + (xx + yy) % 97 - 48
    noise = np.random.default_rng(seed).normal(0, 12, size=(h, w, 3))
    img = base[:, :, None] + noise
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def vgg_weights():
    return make_synthetic_vgg(seed=0)
