import io

import numpy as np
import pytest

from conftest import make_synthetic_vgg, random_image
from vggmetric.errors import FormatError, PreconditionError
from vggmetric.tensor import ConvParams
from vggmetric.vgg import (
    CHANNELS,
    MEAN_RGB,
    VggWeights,
    extract_features,
    load_vgg_weights,
    preprocess,
    save_vgg_weights,
)


def zero_vgg():
    layers = []
    prev = 3
    for ch in CHANNELS:
        layers.append(
            ConvParams(
                kernel=np.zeros((ch, prev, 3, 3), dtype=np.float32),
                bias=np.zeros(ch, dtype=np.float32),
            )
        )
        prev = ch
    return VggWeights(layers=tuple(layers))


def test_round_trip_bit_identical():
    weights = make_synthetic_vgg(seed=11)
    buf = io.BytesIO()
    save_vgg_weights(weights, buf)
    buf.seek(0)
    reloaded = load_vgg_weights(buf)
    for a, b in zip(weights.layers, reloaded.layers):
        assert np.array_equal(a.kernel, b.kernel)
        assert np.array_equal(a.bias, b.bias)


def test_bad_magic():
    with pytest.raises(FormatError):
        load_vgg_weights(io.BytesIO(b"XXXX" + bytes(100)))


def test_truncated_stream():
    weights = make_synthetic_vgg(seed=12)
    buf = io.BytesIO()
    save_vgg_weights(weights, buf)
    data = buf.getvalue()
    with pytest.raises(FormatError):
        load_vgg_weights(io.BytesIO(data[: len(data) // 2]))


def test_wrong_version():
    buf = io.BytesIO()
    save_vgg_weights(zero_vgg(), buf)
    data = bytearray(buf.getvalue())
    data[4] = 9
    with pytest.raises(FormatError):
        load_vgg_weights(io.BytesIO(bytes(data)))


def test_shape_outside_schedule():
    buf = io.BytesIO()
    save_vgg_weights(zero_vgg(), buf)
    data = bytearray(buf.getvalue())
    data[12] = 63  # first layer out_ch 64 -> 63
    with pytest.raises(FormatError):
        load_vgg_weights(io.BytesIO(bytes(data)))


def test_layer_count_must_be_13():
    with pytest.raises(PreconditionError):
        VggWeights(layers=tuple(zero_vgg().layers[:12]))


def test_preprocess_means():
    img = np.empty((32, 32, 3), dtype=np.uint8)
    img[:, :] = (124, 117, 104)
    t = preprocess(img)
    assert t.shape == (3, 32, 32)
    np.testing.assert_allclose(t[:, 0, 0], [0.32, 0.221, 0.061], atol=1e-4)


def test_preprocess_black():
    t = preprocess(np.zeros((40, 40, 3), dtype=np.uint8))
    np.testing.assert_allclose(t[:, 0, 0], [-v for v in MEAN_RGB], atol=1e-4)


def test_preprocess_too_small():
    with pytest.raises(PreconditionError):
        preprocess(np.zeros((31, 40, 3), dtype=np.uint8))


def test_tap_shapes_224(vgg_weights):
    x = preprocess(random_image(np.random.default_rng(0), 224, 224))
    fs = extract_features(x, vgg_weights)
    spatial = [t.shape[1] for t in fs.taps]
    channels = [t.shape[0] for t in fs.taps]
    assert spatial == [224, 112, 112, 56, 56, 28, 28, 14, 14, 7]
    assert channels == [64, 64, 128, 128, 256, 256, 512, 512, 512, 512]


def test_taps_nonnegative_and_finite(vgg_weights):
    x = preprocess(random_image(np.random.default_rng(1), 48, 40))
    fs = extract_features(x, vgg_weights)
    assert len(fs.taps) == 10
    for tap in fs.taps:
        assert (tap >= 0).all()
        assert np.isfinite(tap).all()


def test_zero_kernels_give_bias_pattern():
    rng = np.random.default_rng(2)
    layers = []
    prev = 3
    for ch in CHANNELS:
        layers.append(
            ConvParams(
                kernel=np.zeros((ch, prev, 3, 3), dtype=np.float32),
                bias=rng.normal(size=ch).astype(np.float32),
            )
        )
        prev = ch
    weights = VggWeights(layers=tuple(layers))
    x = preprocess(random_image(rng, 32, 32))
    fs = extract_features(x, weights)
    for tap, layer_index in zip(fs.taps, (1, 1, 3, 3, 6, 6, 9, 9, 12, 12)):
        # each channel is constant: the ReLU'd bias of the block's last conv
        expected = np.maximum(weights.layers[layer_index].bias, 0.0)
        assert (tap == expected[:, None, None]).all()


def test_determinism(vgg_weights):
    img = random_image(np.random.default_rng(3), 40, 48)
    a = extract_features(preprocess(img), vgg_weights)
    b = extract_features(preprocess(img), vgg_weights)
    for ta, tb in zip(a.taps, b.taps):
        assert np.array_equal(ta, tb)
