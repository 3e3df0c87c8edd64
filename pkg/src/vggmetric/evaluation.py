"""Rank statistics and triplet scoring for the evaluation harness.

Spearman uses average (fractional) ranks for ties; Kendall is the
tie-corrected tau-b. Triplet accuracy counts an exact vote tie as 0.5;
the human ceiling is leave-one-out inter-rater agreement with the same
tie convention.

The MOS harness correlates the negated metric against MOS (the metric
measures distortion, MOS measures quality) and reports the raw
orientation alongside, so published SROCC numbers are directly
comparable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, PreconditionError, UndefinedStatisticError
from .metric import MetricWeights, metric
from .ppm import read_ppm
from .vgg import VggWeights


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average of ranks i+1..j+1
        i = j + 1
    return ranks


def _check_pair(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise PreconditionError(f"inputs must be equal-length 1-d lists, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise PreconditionError("need at least 2 observations")
    return x, y


def spearman(xs, ys) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x, y = _check_pair(xs, ys)
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0 or vy == 0:
        raise UndefinedStatisticError("spearman undefined: an input has zero rank variance")
    return float(dx @ dy) / np.sqrt(vx * vy)


def kendall(xs, ys) -> float:
    """Kendall tau-b (tie-corrected)."""
    x, y = _check_pair(xs, ys)
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(len(x), k=1)
    sx, sy = sx[upper], sy[upper]
    concordant_minus_discordant = float((sx * sy).sum())
    n0 = len(sx)
    ties_x = int((sx == 0).sum())
    ties_y = int((sy == 0).sum())
    denom = np.sqrt(float(n0 - ties_x) * float(n0 - ties_y))
    if denom == 0:
        raise UndefinedStatisticError("kendall undefined: all pairs tied in an input")
    return concordant_minus_discordant / denom


@dataclass(frozen=True)
class TripletOutcome:
    predicted: str  # "A" or "B"
    votes_a: int
    votes_b: int
    votes_unsure: int = 0

    def __post_init__(self):
        if self.predicted not in ("A", "B"):
            raise PreconditionError("predicted must be 'A' or 'B'")


def triplet_accuracy(outcomes) -> float:
    """Fraction of triplets whose predicted side holds the vote majority;
    exact vote ties score 0.5. UNSURE-only triplets are excluded."""
    scores = []
    for o in outcomes:
        if o.votes_a + o.votes_b < 1:
            continue
        if o.votes_a == o.votes_b:
            scores.append(0.5)
        else:
            majority = "A" if o.votes_a > o.votes_b else "B"
            scores.append(1.0 if o.predicted == majority else 0.0)
    if not scores:
        raise PreconditionError("no scorable triplets (all UNSURE-only)")
    return float(np.mean(scores))


def human_ceiling(records) -> float:
    """Average leave-one-out inter-rater agreement over triplets with at
    least two A/B votes: the chance a held-out vote matches the majority
    of the remaining votes, ties counting 0.5."""
    per_triplet = []
    for rec in records:
        n_a, n_b = rec.votes_a, rec.votes_b
        total = n_a + n_b
        if total < 2:
            continue
        agreement = 0.0
        if n_a > 0:  # hold out one A vote
            agreement += n_a * _match_majority(n_a - 1, n_b, held="A")
        if n_b > 0:
            agreement += n_b * _match_majority(n_a, n_b - 1, held="B")
        per_triplet.append(agreement / total)
    if not per_triplet:
        raise PreconditionError("no triplets with >= 2 non-UNSURE votes")
    return float(np.mean(per_triplet))


def _match_majority(rem_a: int, rem_b: int, held: str) -> float:
    if rem_a == rem_b:
        return 0.5
    majority = "A" if rem_a > rem_b else "B"
    return 1.0 if held == majority else 0.0


@dataclass(frozen=True)
class MosEvalResult:
    srocc: float  # rank correlation of (-metric) with MOS
    krocc: float
    raw_srocc_sign: int  # sign of corr(metric, MOS); -1 is the expected orientation
    inverted: bool  # True when the metric ranks opposite to expectation
    n_used: int
    n_skipped: int
    values: tuple  # (metric, mos) pairs actually used


def evaluate_mos_dataset(
    entries,
    weights: MetricWeights,
    vgg: VggWeights,
    base_dir=".",
    metric_fn=None,
) -> MosEvalResult:
    """Score (reference, distorted, mos) entries and rank-correlate.

    `metric_fn(ref_img, dist_img)` may replace the learned metric (used
    by tests); unreadable entries are skipped unless they exceed 1%.
    """
    entries = list(entries)
    if not entries:
        raise PreconditionError("empty MOS dataset")
    base = Path(base_dir)
    scores, moses = [], []
    skipped = []
    for ref_path, dist_path, mos in entries:
        try:
            ref = read_ppm(base / ref_path)
            dist = read_ppm(base / dist_path)
            if metric_fn is not None:
                value = metric_fn(ref, dist)
            else:
                value = metric(ref, dist, weights, vgg)
        except (OSError, DataError, PreconditionError) as exc:
            skipped.append((ref_path, dist_path, str(exc)))
            continue
        scores.append(value)
        moses.append(float(mos))
    if len(skipped) > 0.01 * len(entries):
        detail = "; ".join(f"{r}/{d}: {m}" for r, d, m in skipped[:5])
        raise DataError(f"{len(skipped)} of {len(entries)} entries unreadable: {detail}")
    neg = [-s for s in scores]
    srocc = spearman(neg, moses)
    krocc = kendall(neg, moses)
    raw_sign = int(np.sign(-srocc)) if srocc != 0 else 0
    return MosEvalResult(
        srocc=srocc,
        krocc=krocc,
        raw_srocc_sign=raw_sign,
        inverted=srocc < 0,
        n_used=len(scores),
        n_skipped=len(skipped),
        values=tuple(zip(scores, moses)),
    )


def read_mos_manifest(path) -> list[tuple[str, str, float]]:
    """CSV with header `reference,distorted,mos`."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"reference", "distorted", "mos"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{path}: manifest header must contain {sorted(required)}")
        for row in reader:
            try:
                entries.append((row["reference"], row["distorted"], float(row["mos"])))
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}: bad manifest row {row}: {exc}") from exc
    return entries
