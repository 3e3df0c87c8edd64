"""Per-pixel decomposition of the metric, overlay rendering, the scale
pyramid probe, and region scrambling.

The heatmap drops the spatial summation of the metric: each tap's
channel-summed absolute difference map is scaled by its weight,
upsampled to the input resolution, and the ten maps are added. The
upsampling distributes every coarse value evenly over the pixels that
map to it, so the heatmap's total equals the metric value by
construction (up to float rounding).
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .metric import MetricWeights
from .vgg import MIN_IMAGE_SIDE, VggWeights, extract_features, preprocess


def _upsample_conserving(coarse: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor upsample dividing each value over its replica pixels."""
    h, w = coarse.shape
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    row_counts = np.bincount(rows, minlength=h).astype(np.float64)
    col_counts = np.bincount(cols, minlength=w).astype(np.float64)
    spread = coarse / (row_counts[:, None] * col_counts[None, :])
    return spread[rows][:, cols]


def heatmap_from_features(fx, fy, weights: MetricWeights, out_h: int, out_w: int) -> np.ndarray:
    total = np.zeros((out_h, out_w), dtype=np.float64)
    for w_i, a, b in zip(weights.w, fx.taps, fy.taps):
        if a.shape != b.shape:
            raise PreconditionError(f"tap shapes differ: {a.shape} vs {b.shape}")
        per_pixel = np.abs(a.astype(np.float64) - b.astype(np.float64)).sum(axis=0)
        total += w_i * _upsample_conserving(per_pixel, out_h, out_w)
    return total


def heatmap(x: np.ndarray, y: np.ndarray, weights: MetricWeights, vgg: VggWeights) -> np.ndarray:
    """Per-pixel distortion map at the input resolution; sums to metric(x, y)."""
    if x.shape != y.shape:
        raise PreconditionError(f"image shapes differ: {x.shape} vs {y.shape}")
    fx = extract_features(preprocess(x), vgg)
    fy = extract_features(preprocess(y), vgg)
    return heatmap_from_features(fx, fy, weights, x.shape[0], x.shape[1])


def render_overlay(base: np.ndarray, map: np.ndarray, gain: float = 1.0) -> np.ndarray:
    """Overlay a heatmap on an image: red/blue dimmed, green boosted.

    The map is normalized by its 99th percentile so one hot pixel cannot
    blank the visualization.
    """
    base = np.asarray(base)
    if base.ndim != 3 or base.shape[2] != 3 or base.dtype != np.uint8:
        raise PreconditionError("base must be a (H, W, 3) uint8 image")
    if map.shape != base.shape[:2]:
        raise PreconditionError(f"map shape {map.shape} does not match image {base.shape[:2]}")
    if gain <= 0:
        raise PreconditionError("gain must be positive")
    ref = float(np.percentile(map, 99.0))
    norm = map / ref if ref > 0 else np.zeros_like(map)
    out = base.astype(np.float64)
    out[:, :, 0] *= 0.5
    out[:, :, 2] *= 0.5
    out[:, :, 1] += gain * 255.0 * norm
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def downsample2(image: np.ndarray) -> np.ndarray:
    """Halve an image by 2x2 area averaging (trailing odd row/col dropped)."""
    img = np.asarray(image)
    h2, w2 = img.shape[0] // 2, img.shape[1] // 2
    if h2 < 1 or w2 < 1:
        raise PreconditionError("image too small to downsample")
    blocks = img[: 2 * h2, : 2 * w2].astype(np.float64)
    blocks = blocks.reshape(h2, 2, w2, 2, 3).mean(axis=(1, 3))
    return np.clip(np.round(blocks), 0, 255).astype(np.uint8)


def add_gaussian_noise(image: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    if sigma < 0:
        raise PreconditionError("sigma must be nonnegative")
    if sigma == 0:
        return np.asarray(image).copy()
    rng = np.random.default_rng(seed)
    noisy = image.astype(np.float64) + rng.normal(0.0, sigma, size=image.shape)
    return np.clip(np.round(noisy), 0, 255).astype(np.uint8)


def pyramid_heatmaps(
    x: np.ndarray,
    noise_sigma: float,
    levels: int,
    weights: MetricWeights,
    vgg: VggWeights,
    seed: int = 0,
) -> list[np.ndarray]:
    """Heatmaps of (clean, clean + noise) at successively halved resolutions.

    Level 0 is the original resolution; each further level halves by area
    averaging before the noise is added.
    """
    if levels < 1:
        raise PreconditionError("levels must be >= 1")
    clean = np.asarray(x)
    maps = []
    for level in range(levels):
        if level > 0:
            clean = downsample2(clean)
        if clean.shape[0] < MIN_IMAGE_SIDE or clean.shape[1] < MIN_IMAGE_SIDE:
            raise PreconditionError(
                f"pyramid level {level} is {clean.shape[0]}x{clean.shape[1]}, "
                f"below the {MIN_IMAGE_SIDE}-pixel minimum"
            )
        noisy = add_gaussian_noise(clean, noise_sigma, seed + level)
        maps.append(heatmap(clean, noisy, weights, vgg))
    return maps


def scramble_region(image: np.ndarray, rect: tuple[int, int, int, int], seed: int = 0) -> np.ndarray:
    """Permute the pixels inside rect = (x, y, w, h) with a seeded shuffle.

    The pixel-value multiset inside the region is preserved exactly;
    everything outside is untouched.
    """
    img = np.asarray(image)
    x0, y0, w, h = rect
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > img.shape[1] or y0 + h > img.shape[0]:
        raise PreconditionError(f"rect {rect} outside image bounds {img.shape[:2]}")
    out = img.copy()
    region = out[y0 : y0 + h, x0 : x0 + w].reshape(h * w, -1)
    perm = np.random.default_rng(seed).permutation(h * w)
    out[y0 : y0 + h, x0 : x0 + w] = region[perm].reshape(h, w, -1)
    return out
