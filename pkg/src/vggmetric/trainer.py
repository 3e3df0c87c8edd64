"""Fitting the 10 tap weights by logistic regression on triplet data.

Each rated triplet (O, A, B) contributes difference features
X = Phi(O, A) - Phi(O, B). A vote for A becomes a label-0 example, a
vote for B a label-1 example, weighted by the vote counts; the decision
function g(W.X) has no bias term so that swapping A and B flips the
predicted probability exactly.

The loss is the weight-normalized negative log-likelihood plus an L2
penalty; it is convex, so deterministic full-batch gradient descent with
backtracking (halve the step whenever the loss would increase) reaches
the optimum from W = 0.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, PreconditionError, TrainingError
from .metric import N_TAPS, MetricWeights, layer_distances
from .ppm import read_ppm
from .vgg import VggWeights, extract_features, preprocess

_CACHE_MAGIC = b"TRIP"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class TripletRecord:
    ref: str
    a: str
    b: str
    votes_a: int = 0
    votes_b: int = 0
    votes_unsure: int = 0

    def to_json(self) -> dict:
        return {
            "ref": self.ref,
            "a": self.a,
            "b": self.b,
            "votes_a": self.votes_a,
            "votes_b": self.votes_b,
            "votes_unsure": self.votes_unsure,
        }


def read_triplet_records(path) -> list[TripletRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(
                    TripletRecord(
                        ref=obj["ref"],
                        a=obj["a"],
                        b=obj["b"],
                        votes_a=int(obj.get("votes_a", 0)),
                        votes_b=int(obj.get("votes_b", 0)),
                        votes_unsure=int(obj.get("votes_unsure", 0)),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad triplet record: {exc}") from exc
    return records


def write_triplet_records(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


@dataclass(frozen=True)
class TripletFeature:
    x: np.ndarray  # Phi(o,a) - Phi(o,b), length 10
    label: int  # 1 if b was judged closer to o, else 0
    weight: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.shape != (N_TAPS,) or not np.all(np.isfinite(x)):
            raise PreconditionError(f"feature must be {N_TAPS} finite values")
        if self.label not in (0, 1):
            raise PreconditionError("label must be 0 or 1")
        if self.weight < 0:
            raise PreconditionError("weight must be nonnegative")
        object.__setattr__(self, "x", x)


@dataclass
class TrainConfig:
    l2_lambda: float = 1e-3
    learning_rate: float = 1.0
    max_iters: int = 10000
    grad_tolerance: float = 1e-8
    unsure_policy: str = "discard"  # or "half"
    standardize: bool = False  # non-default experiment knob, off to match raw feature scales

    def __post_init__(self):
        if self.l2_lambda < 0:
            raise PreconditionError("l2_lambda must be >= 0")
        if self.learning_rate <= 0 or self.max_iters < 1 or self.grad_tolerance <= 0:
            raise PreconditionError("learning_rate, max_iters, grad_tolerance must be positive")
        if self.unsure_policy not in ("discard", "half"):
            raise PreconditionError("unsure_policy must be 'discard' or 'half'")


def triplet_feature_vector(record: TripletRecord, vgg: VggWeights, base_dir=".") -> np.ndarray:
    """Phi(o, a) - Phi(o, b) for one triplet's images."""
    base = Path(base_dir)
    images = {}
    for tag, rel in (("ref", record.ref), ("a", record.a), ("b", record.b)):
        path = base / rel
        try:
            images[tag] = read_ppm(path)
        except OSError as exc:
            raise DataError(f"triplet ({record.ref}, {record.a}, {record.b}): cannot load {path}: {exc}") from exc
    if not (images["ref"].shape == images["a"].shape == images["b"].shape):
        raise DataError(
            f"triplet ({record.ref}, {record.a}, {record.b}): images differ in size"
        )
    fo = extract_features(preprocess(images["ref"]), vgg)
    fa = extract_features(preprocess(images["a"]), vgg)
    fb = extract_features(preprocess(images["b"]), vgg)
    return layer_distances(fo, fa) - layer_distances(fo, fb)


def features_from_votes(x: np.ndarray, record: TripletRecord, unsure_policy: str) -> list[TripletFeature]:
    out = []
    w_a = float(record.votes_a)
    w_b = float(record.votes_b)
    if unsure_policy == "half":
        w_a += 0.5 * record.votes_unsure
        w_b += 0.5 * record.votes_unsure
    if w_a > 0:
        out.append(TripletFeature(x=x, label=0, weight=w_a))
    if w_b > 0:
        out.append(TripletFeature(x=x, label=1, weight=w_b))
    return out


def build_features(records, vgg: VggWeights, base_dir=".", unsure_policy: str = "discard") -> list[TripletFeature]:
    features = []
    for rec in records:
        x = triplet_feature_vector(rec, vgg, base_dir=base_dir)
        features.extend(features_from_votes(x, rec, unsure_policy))
    return features


def _as_arrays(features) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not features:
        raise PreconditionError("feature list is empty")
    x = np.stack([f.x for f in features])
    y = np.array([f.label for f in features], dtype=np.float64)
    w = np.array([f.weight for f in features], dtype=np.float64)
    if w.sum() <= 0:
        raise PreconditionError("total example weight is zero")
    return x, y, w


def loss_and_gradient(weights: np.ndarray, features, l2_lambda: float) -> tuple[float, np.ndarray]:
    """Weight-normalized negative log-likelihood with L2 penalty, and its
    exact gradient."""
    weights = np.asarray(weights, dtype=np.float64)
    x, y, w = _as_arrays(features)
    return _loss_and_gradient_arrays(weights, x, y, w, l2_lambda)


def _loss_and_gradient_arrays(weights, x, y, w, l2_lambda):
    z = x @ weights
    # -log g(z) = log(1 + e^-z), computed stably
    nll = y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)
    total_w = w.sum()
    loss = float((w @ nll) / total_w + l2_lambda * (weights @ weights))
    residual = _sigmoid(z) - y
    grad = x.T @ (w * residual) / total_w + 2.0 * l2_lambda * weights
    return loss, grad


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_preference(weights, x) -> float:
    """g(W.X): the probability that B is judged closer to the reference."""
    w = np.asarray(weights.w if isinstance(weights, MetricWeights) else weights, dtype=np.float64)
    z = float(w @ np.asarray(x, dtype=np.float64))
    return float(_sigmoid(np.array([z]))[0])


def train(features, config: TrainConfig | None = None, name: str = "trained") -> MetricWeights:
    """Full-batch gradient descent from W = 0; deterministic."""
    config = config or TrainConfig()
    x, y, w = _as_arrays(features)
    if config.standardize:
        scale = np.abs(x).mean(axis=0)
        scale[scale == 0] = 1.0
        x = x / scale
    else:
        scale = None
    weights = np.zeros(N_TAPS, dtype=np.float64)
    lr = config.learning_rate
    loss, grad = _loss_and_gradient_arrays(weights, x, y, w, config.l2_lambda)
    for iteration in range(config.max_iters):
        if not np.isfinite(loss):
            raise TrainingError(f"loss became non-finite at iteration {iteration}", iteration)
        if np.max(np.abs(grad)) < config.grad_tolerance:
            break
        while True:
            candidate = weights - lr * grad
            new_loss, new_grad = _loss_and_gradient_arrays(candidate, x, y, w, config.l2_lambda)
            if np.isfinite(new_loss) and new_loss <= loss:
                break
            lr *= 0.5
            if lr < 1e-30:
                raise TrainingError(
                    f"step size underflow at iteration {iteration} (loss {loss})", iteration
                )
        weights, loss, grad = candidate, new_loss, new_grad
    if scale is not None:
        weights = weights / scale
    return MetricWeights(w=weights, name=name)


def save_feature_cache(features, path) -> None:
    """Binary cache: 16-byte header then f32 rows of (10 values, label, weight)."""
    x, y, w = _as_arrays(features)
    rows = np.hstack([x, y[:, None], w[:, None]]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<III", _CACHE_VERSION, rows.shape[0], 0))
        fh.write(rows.tobytes())


def load_feature_cache(path) -> list[TripletFeature]:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _CACHE_MAGIC:
            raise FormatError(f"{path}: not a TRIP feature cache")
        version, count, _reserved = struct.unpack("<III", header[4:])
        if version != _CACHE_VERSION:
            raise FormatError(f"{path}: unsupported cache version {version}")
        payload = fh.read()
    expected = count * 12 * 4
    if len(payload) != expected:
        raise FormatError(f"{path}: cache payload is {len(payload)} bytes, expected {expected}")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, 12).astype(np.float64)
    return [
        TripletFeature(x=row[:N_TAPS], label=int(row[N_TAPS]), weight=float(row[N_TAPS + 1]))
        for row in rows
    ]
