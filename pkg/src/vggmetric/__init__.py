"""Full-reference perceptual image metric on VGG-16 feature distances."""

from .metric import MetricWeights, layer_distances, load_weights, metric, save_weights, uniform_weights
from .vgg import FeatureSet, VggWeights, extract_features, load_vgg_weights, preprocess, save_vgg_weights

__all__ = [
    "MetricWeights",
    "FeatureSet",
    "VggWeights",
    "extract_features",
    "layer_distances",
    "load_vgg_weights",
    "load_weights",
    "metric",
    "preprocess",
    "save_vgg_weights",
    "save_weights",
    "uniform_weights",
]
