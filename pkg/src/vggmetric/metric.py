"""The learned perceptual distance: a weighted sum of per-tap L1 feature
distances, linear in the 10-element weight vector.

L1 norms are raw sums over all channels and positions, not per-element
means; the learned weights absorb the very different tap sizes. A
per-element-normalized variant exists behind `normalize=True` for
experimentation only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, PreconditionError
from .vgg import TAP_NAMES, FeatureSet, VggWeights, extract_features, preprocess

N_TAPS = 10


@dataclass(frozen=True)
class MetricWeights:
    w: np.ndarray
    name: str = "unnamed"
    tap_order: tuple[str, ...] = field(default=TAP_NAMES)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.shape != (N_TAPS,):
            raise PreconditionError(f"expected {N_TAPS} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise PreconditionError("weights must be finite")
        object.__setattr__(self, "w", w)


def uniform_weights(name: str = "untrained") -> MetricWeights:
    """All-ones weights (the untrained ablation)."""
    return MetricWeights(w=np.ones(N_TAPS), name=name)


def parse_weights_text(text: str, name: str = "loaded") -> MetricWeights:
    """Parse the one-line weights format: 10 decimals, '#' comments allowed."""
    values = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.extend(line.split())
    if len(values) != N_TAPS:
        raise FormatError(f"weights file must contain exactly {N_TAPS} values, found {len(values)}")
    try:
        w = np.array([float(v) for v in values], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"non-numeric weight entry: {exc}") from exc
    return MetricWeights(w=w, name=name)


def load_weights(path) -> MetricWeights:
    with open(path) as fh:
        return parse_weights_text(fh.read(), name=str(path))


def save_weights(weights: MetricWeights, path) -> None:
    with open(path, "w") as fh:
        fh.write("# " + " ".join(weights.tap_order) + "\n")
        fh.write(" ".join(repr(float(v)) for v in weights.w) + "\n")


def layer_distances(fx: FeatureSet, fy: FeatureSet, normalize: bool = False) -> np.ndarray:
    """Per-tap L1 distances between two feature sets (length-10 vector)."""
    phi = np.empty(N_TAPS, dtype=np.float64)
    for i, (a, b) in enumerate(zip(fx.taps, fy.taps)):
        if a.shape != b.shape:
            raise PreconditionError(
                f"tap {i} ({TAP_NAMES[i]}) shapes differ: {a.shape} vs {b.shape}"
            )
        d = np.abs(a.astype(np.float64) - b.astype(np.float64)).sum()
        phi[i] = d / a.size if normalize else d
    return phi


def metric_from_features(
    fx: FeatureSet, fy: FeatureSet, weights: MetricWeights, normalize: bool = False
) -> float:
    return float(weights.w @ layer_distances(fx, fy, normalize=normalize))


def metric(
    x: np.ndarray,
    y: np.ndarray,
    weights: MetricWeights,
    vgg: VggWeights,
    normalize: bool = False,
) -> float:
    """Perceptual distance between two equal-sized RGB images."""
    if x.shape != y.shape:
        raise PreconditionError(f"image shapes differ: {x.shape} vs {y.shape}")
    fx = extract_features(preprocess(x), vgg)
    fy = extract_features(preprocess(y), vgg)
    return metric_from_features(fx, fy, weights, normalize=normalize)
