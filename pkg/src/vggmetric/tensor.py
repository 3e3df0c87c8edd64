"""Dense (channels, height, width) float32 tensors and the three kernels
needed for the VGG-16 trunk: 3x3 same-convolution, ReLU, and 2x2 max-pool.

All functions are pure and deterministic; arrays are never modified in
place. Convolution uses one GEMM per kernel offset (9 total), which keeps
memory linear in the input while letting BLAS do the heavy lifting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError


def as_tensor(values) -> np.ndarray:
    t = np.asarray(values, dtype=np.float32)
    if t.ndim != 3:
        raise PreconditionError(f"tensor must be rank 3, got shape {t.shape}")
    return t


@dataclass(frozen=True)
class ConvParams:
    """Weights of one 3x3 convolution layer.

    kernel: (out_channels, in_channels, 3, 3) float32
    bias:   (out_channels,) float32
    """

    kernel: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float32)
        b = np.asarray(self.bias, dtype=np.float32)
        if k.ndim != 4 or k.shape[2:] != (3, 3):
            raise PreconditionError(f"kernel must be (out, in, 3, 3), got {k.shape}")
        if b.shape != (k.shape[0],):
            raise PreconditionError(f"bias shape {b.shape} does not match {k.shape[0]} output channels")
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "bias", b)

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]


def conv2d(input: np.ndarray, params: ConvParams) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding 1: output keeps the spatial size."""
    x = as_tensor(input)
    c, h, w = x.shape
    if c != params.in_channels:
        raise PreconditionError(
            f"input has {c} channels but params expect {params.in_channels}"
        )
    if h < 1 or w < 1:
        raise PreconditionError("input must be at least 1x1")
    padded = np.zeros((c, h + 2, w + 2), dtype=np.float32)
    padded[:, 1 : h + 1, 1 : w + 1] = x
    # im2col: one row block per (channel, dy, dx), then a single GEMM
    columns = np.empty((c, 9, h * w), dtype=np.float32)
    for dy in range(3):
        for dx in range(3):
            columns[:, 3 * dy + dx, :] = padded[:, dy : dy + h, dx : dx + w].reshape(c, h * w)
    flat_kernel = params.kernel.reshape(params.out_channels, c * 9)
    out = flat_kernel @ columns.reshape(c * 9, h * w)
    out += params.bias[:, None]
    return out.reshape(params.out_channels, h, w)


def relu(input: np.ndarray) -> np.ndarray:
    x = as_tensor(input)
    return np.maximum(x, np.float32(0.0))


def maxpool2(input: np.ndarray) -> np.ndarray:
    """2x2 max-pool, stride 2; a trailing odd row/column is dropped."""
    x = as_tensor(input)
    c, h, w = x.shape
    if h < 2 or w < 2:
        raise PreconditionError(f"maxpool2 needs at least 2x2 spatial dims, got {h}x{w}")
    h2, w2 = h // 2, w // 2
    x = x[:, : 2 * h2, : 2 * w2].reshape(c, h2, 2, w2, 2)
    return x.max(axis=(2, 4))
