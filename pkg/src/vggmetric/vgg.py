"""VGG-16 convolutional trunk with activation taps for the metric.

The trunk is the 13 convolution layers of VGG-16 in five blocks
(2, 2, 3, 3, 3 convolutions), each block ending in a 2x2 max-pool.
Ten activations are tapped: the last post-ReLU output of each block and
each pool output. Weights load from the little-endian "VGGW" binary
format; the fully connected layers are never represented.

Preprocessing is classic ImageNet mean subtraction in RGB order on the
0..255 pixel range, with no division by a standard deviation. Metric
values depend on this choice, so it is fixed here rather than
configurable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, PreconditionError
from .tensor import ConvParams, conv2d, maxpool2, relu

# fixed channel schedule of the 13 conv layers
CHANNELS = (64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512)

# conv-layer indices per block; each block ends with a max-pool
BLOCKS = ((0, 1), (2, 3), (4, 5, 6), (7, 8, 9), (10, 11, 12))

TAP_NAMES = (
    "relu1_2", "pool1",
    "relu2_2", "pool2",
    "relu3_3", "pool3",
    "relu4_3", "pool4",
    "relu5_3", "pool5",
)

MEAN_RGB = (123.68, 116.779, 103.939)

MIN_IMAGE_SIDE = 32  # five pooling stages must keep spatial dims >= 1

_MAGIC = b"VGGW"
_VERSION = 1


def _layer_in_channels(index: int) -> int:
    return 3 if index == 0 else CHANNELS[index - 1]


@dataclass(frozen=True)
class VggWeights:
    layers: tuple[ConvParams, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) != 13:
            raise PreconditionError(f"expected 13 conv layers, got {len(layers)}")
        for i, p in enumerate(layers):
            if p.out_channels != CHANNELS[i] or p.in_channels != _layer_in_channels(i):
                raise PreconditionError(
                    f"layer {i} has shape ({p.out_channels}, {p.in_channels}), "
                    f"schedule requires ({CHANNELS[i]}, {_layer_in_channels(i)})"
                )
        object.__setattr__(self, "layers", layers)


@dataclass(frozen=True)
class FeatureSet:
    """The ten tapped activations of one image, in TAP_NAMES order."""

    taps: tuple[np.ndarray, ...]

    def __post_init__(self):
        taps = tuple(self.taps)
        if len(taps) != 10:
            raise PreconditionError(f"expected 10 taps, got {len(taps)}")
        object.__setattr__(self, "taps", taps)

    def shapes(self) -> tuple[tuple[int, int, int], ...]:
        return tuple(t.shape for t in self.taps)


def load_vgg_weights(source) -> VggWeights:
    """Load VGGW weights from a binary file object or a path."""
    if hasattr(source, "read"):
        return _load_stream(source)
    with open(source, "rb") as fh:
        return _load_stream(fh)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated VGGW stream: wanted {n} bytes, got {len(data)}")
    return data


def _load_stream(fh) -> VggWeights:
    magic = _read_exact(fh, 4)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    version, layer_count = struct.unpack("<II", _read_exact(fh, 8))
    if version != _VERSION:
        raise FormatError(f"unsupported VGGW version {version}")
    if layer_count != 13:
        raise FormatError(f"VGGW layer count {layer_count}, expected 13")
    layers = []
    for i in range(13):
        out_ch, in_ch, kh, kw = struct.unpack("<IIII", _read_exact(fh, 16))
        if (out_ch, in_ch) != (CHANNELS[i], _layer_in_channels(i)) or (kh, kw) != (3, 3):
            raise FormatError(
                f"layer {i} shape ({out_ch}, {in_ch}, {kh}, {kw}) outside the fixed schedule"
            )
        kernel = np.frombuffer(
            _read_exact(fh, out_ch * in_ch * 9 * 4), dtype="<f4"
        ).reshape(out_ch, in_ch, 3, 3)
        bias = np.frombuffer(_read_exact(fh, out_ch * 4), dtype="<f4")
        layers.append(ConvParams(kernel=kernel.copy(), bias=bias.copy()))
    return VggWeights(layers=tuple(layers))


def save_vgg_weights(weights: VggWeights, dest) -> None:
    """Write weights in the VGGW binary format (file object or path)."""
    if hasattr(dest, "write"):
        _save_stream(weights, dest)
    else:
        with open(dest, "wb") as fh:
            _save_stream(weights, fh)


def _save_stream(weights: VggWeights, fh) -> None:
    fh.write(_MAGIC)
    fh.write(struct.pack("<II", _VERSION, 13))
    for p in weights.layers:
        fh.write(struct.pack("<IIII", p.out_channels, p.in_channels, 3, 3))
        fh.write(np.ascontiguousarray(p.kernel, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(p.bias, dtype="<f4").tobytes())


def preprocess(image: np.ndarray) -> np.ndarray:
    """uint8 (H, W, 3) RGB image -> mean-subtracted (3, H, W) float32 tensor."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise PreconditionError(f"expected (H, W, 3) RGB image, got shape {img.shape}")
    h, w = img.shape[:2]
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise PreconditionError(f"image {h}x{w} smaller than {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}")
    x = img.astype(np.float32).transpose(2, 0, 1)
    means = np.asarray(MEAN_RGB, dtype=np.float32).reshape(3, 1, 1)
    return x - means


def extract_features(input: np.ndarray, weights: VggWeights) -> FeatureSet:
    """Run the trunk and collect the 10 tapped activations."""
    x = np.asarray(input, dtype=np.float32)
    if x.ndim != 3 or x.shape[0] != 3:
        raise PreconditionError(f"expected a preprocessed (3, H, W) tensor, got {x.shape}")
    if x.shape[1] < MIN_IMAGE_SIDE or x.shape[2] < MIN_IMAGE_SIDE:
        raise PreconditionError("input smaller than 32x32")
    taps = []
    for block in BLOCKS:
        for layer_index in block:
            x = relu(conv2d(x, weights.layers[layer_index]))
        taps.append(x)  # last ReLU of the block
        x = maxpool2(x)
        taps.append(x)  # pool output
    return FeatureSet(taps=tuple(taps))
