"""Convert a published pretrained VGG-16 checkpoint into the VGGW binary
format.

Supported sources:
  - .npz archives with keys `<layer>.weight` / `<layer>.bias` using the
    canonical layer names (conv1_1 .. conv5_3) or torchvision's
    `features.<idx>.weight` indices;
  - PyTorch .pt/.pth state dicts with torchvision key names (requires
    torch at runtime).

The kernel element order of the source must be declared explicitly with
the layout flag (out-in-h-w for PyTorch tensors, h-w-in-out for
TensorFlow-style arrays); silent transposition is the classic failure
mode here, so there is no auto-detection. Classifier layers are ignored.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

LAYER_NAMES = (
    "conv1_1", "conv1_2",
    "conv2_1", "conv2_2",
    "conv3_1", "conv3_2", "conv3_3",
    "conv4_1", "conv4_2", "conv4_3",
    "conv5_1", "conv5_2", "conv5_3",
)

# (out_channels, in_channels) per layer, fixed VGG-16 schedule
LAYER_SHAPES = (
    (64, 3), (64, 64),
    (128, 64), (128, 128),
    (256, 128), (256, 256), (256, 256),
    (512, 256), (512, 512), (512, 512),
    (512, 512), (512, 512), (512, 512),
)

# torchvision vgg16 `features` module indices of the conv layers
TORCHVISION_INDICES = (0, 2, 5, 7, 10, 12, 14, 17, 19, 21, 24, 26, 28)

LAYOUTS = ("out-in-h-w", "h-w-in-out")

_MAGIC = b"VGGW"
_VERSION = 1


class ConversionError(Exception):
    pass


@dataclass(frozen=True)
class LayerReport:
    name: str
    kernel_shape: tuple[int, ...]
    sha256: str
    byte_count: int


@dataclass(frozen=True)
class ConversionReport:
    layers: tuple[LayerReport, ...]
    total_bytes: int

    def to_json(self) -> dict:
        return {
            "layers": [
                {
                    "name": l.name,
                    "kernel_shape": list(l.kernel_shape),
                    "sha256": l.sha256,
                    "byte_count": l.byte_count,
                }
                for l in self.layers
            ],
            "total_bytes": self.total_bytes,
        }


def _lookup(arrays: dict, layer_index: int, suffix: str) -> np.ndarray:
    name = LAYER_NAMES[layer_index]
    tv_key = f"features.{TORCHVISION_INDICES[layer_index]}.{suffix}"
    for key in (f"{name}.{suffix}", tv_key):
        if key in arrays:
            return np.asarray(arrays[key])
    raise ConversionError(f"missing layer {name}: no key {name}.{suffix} or {tv_key}")


def _to_out_in_h_w(kernel: np.ndarray, layout: str, name: str) -> np.ndarray:
    if kernel.ndim != 4:
        raise ConversionError(f"layer {name}: kernel must be rank 4, got shape {kernel.shape}")
    if layout == "out-in-h-w":
        return kernel
    if layout == "h-w-in-out":
        return kernel.transpose(3, 2, 0, 1)
    raise ConversionError(f"unknown layout {layout!r}, expected one of {LAYOUTS}")


def load_checkpoint(path: str) -> dict:
    """Load a checkpoint file into a plain name -> array dict."""
    if path.endswith(".npz"):
        with np.load(path) as data:
            return {k: np.asarray(data[k]) for k in data.files}
    if path.endswith((".pt", ".pth")):
        import torch

        state = torch.load(path, map_location="cpu", weights_only=True)
        if hasattr(state, "state_dict"):
            state = state.state_dict()
        return {k: v.detach().cpu().numpy() for k, v in state.items()}
    raise ConversionError(f"unrecognized checkpoint extension: {path} (want .npz, .pt or .pth)")


def convert(arrays: dict, output_path: str, layout: str = "out-in-h-w") -> ConversionReport:
    """Emit a VGGW stream from checkpoint arrays; returns the per-layer report."""
    if layout not in LAYOUTS:
        raise ConversionError(f"unknown layout {layout!r}, expected one of {LAYOUTS}")
    reports = []
    total = 12  # file header
    chunks = [_MAGIC + struct.pack("<II", _VERSION, 13)]
    for i, (name, (out_ch, in_ch)) in enumerate(zip(LAYER_NAMES, LAYER_SHAPES)):
        kernel = _to_out_in_h_w(_lookup(arrays, i, "weight"), layout, name)
        bias = np.asarray(_lookup(arrays, i, "bias"))
        if kernel.shape != (out_ch, in_ch, 3, 3):
            raise ConversionError(
                f"layer {name}: kernel shape {kernel.shape} after layout "
                f"{layout}, expected ({out_ch}, {in_ch}, 3, 3)"
            )
        if bias.shape != (out_ch,):
            raise ConversionError(f"layer {name}: bias shape {bias.shape}, expected ({out_ch},)")
        payload = (
            struct.pack("<IIII", out_ch, in_ch, 3, 3)
            + np.ascontiguousarray(kernel, dtype="<f4").tobytes()
            + np.ascontiguousarray(bias, dtype="<f4").tobytes()
        )
        chunks.append(payload)
        total += len(payload)
        reports.append(
            LayerReport(
                name=name,
                kernel_shape=tuple(kernel.shape),
                sha256=hashlib.sha256(payload).hexdigest(),
                byte_count=len(payload),
            )
        )
    with open(output_path, "wb") as fh:
        for chunk in chunks:
            fh.write(chunk)
    report = ConversionReport(layers=tuple(reports), total_bytes=total)
    with open(output_path + ".report.json", "w") as fh:
        json.dump(report.to_json(), fh, indent=2)
    return report
