"""Distortion synthesis: seven parameterized distortion kinds, random
pipelines of them, 224x224 random cropping, and triplet generation.

Every distortion is a deterministic function of (image, DistortionSpec) including
the seed, so datasets are reproducible byte for byte. The jpeg_like kind
approximates JPEG by 8x8 block DCT quantization with the standard
luminance/chrominance tables; it produces the blocking and ringing
artifacts without emitting a bitstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.fft import dctn, idctn

from .errors import DataError, PreconditionError
from .ppm import read_ppm, write_ppm

KINDS = (
    "gauss_noise_rgb",
    "gauss_noise_luma",
    "blur",
    "posterize",
    "gamma",
    "contrast_rescale",
    "jpeg_like",
)

CROP_SIZE = 224

# ITU-T T.81 Annex K quantization tables
LUMA_QTABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)

CHROMA_QTABLE = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class DistortionSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown distortion kind {self.kind!r}")
        p = self.params
        if self.kind in ("gauss_noise_rgb", "gauss_noise_luma", "blur"):
            if p.get("sigma", -1) < 0:
                raise PreconditionError("sigma must be >= 0")
        elif self.kind == "posterize":
            levels = p.get("levels", 0)
            if not 2 <= levels <= 256:
                raise PreconditionError("posterize levels must be in [2, 256]")
        elif self.kind == "gamma":
            g = p.get("gamma", 0.0)
            if not 0 < g <= 8:
                raise PreconditionError("gamma must be in (0, 8]")
        elif self.kind == "contrast_rescale":
            lo, hi = p.get("lo", -1), p.get("hi", -1)
            if not (0 <= lo < hi <= 255):
                raise PreconditionError("contrast bounds must satisfy 0 <= lo < hi <= 255")
        elif self.kind == "jpeg_like":
            q = p.get("quality", 0)
            if not 1 <= q <= 100:
                raise PreconditionError("jpeg quality must be in [1, 100]")

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_json(cls, obj: dict) -> "DistortionSpec":
        return cls(kind=obj["kind"], params=dict(obj["params"]), seed=int(obj["seed"]))


@dataclass(frozen=True)
class PipelineSpec:
    steps: tuple[DistortionSpec, ...]
    master_seed: int = 0

    def __post_init__(self):
        steps = tuple(self.steps)
        if len(steps) < 1:
            raise PreconditionError("pipeline needs at least one step")
        object.__setattr__(self, "steps", steps)

    def to_json(self) -> dict:
        return {"master_seed": int(self.master_seed), "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineSpec":
        return cls(
            steps=tuple(DistortionSpec.from_json(s) for s in obj["steps"]),
            master_seed=int(obj.get("master_seed", 0)),
        )


def _clamp_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.round(values), 0, 255).astype(np.uint8)


def _gauss_noise_rgb(img, sigma, seed):
    if sigma == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return _clamp_u8(img.astype(np.float64) + rng.normal(0.0, sigma, img.shape))


def _gauss_noise_luma(img, sigma, seed):
    if sigma == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, img.shape[:2])
    return _clamp_u8(img.astype(np.float64) + noise[:, :, None])


def _blur(img, sigma):
    if sigma == 0:
        return img.copy()
    radius = int(np.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (t / sigma) ** 2)
    kernel /= kernel.sum()
    # separable Gaussian; 'nearest' is edge-replicate padding
    blurred = ndimage.convolve1d(img.astype(np.float64), kernel, axis=0, mode="nearest")
    blurred = ndimage.convolve1d(blurred, kernel, axis=1, mode="nearest")
    return _clamp_u8(blurred)


def _posterize(img, levels):
    bins = np.floor(img.astype(np.float64) * levels / 256.0)
    centers = np.floor((bins + 0.5) * 256.0 / levels)
    return _clamp_u8(centers)


def _gamma(img, g):
    return _clamp_u8(255.0 * (img.astype(np.float64) / 255.0) ** g)


def _contrast_rescale(img, lo, hi):
    return _clamp_u8((img.astype(np.float64) - lo) * 255.0 / (hi - lo))


def quantization_tables(quality: int) -> tuple[np.ndarray, np.ndarray]:
    """Scale the Annex K tables by quality with the standard IJG rule."""
    s = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    luma = np.maximum(1.0, np.floor((LUMA_QTABLE * s + 50.0) / 100.0))
    chroma = np.maximum(1.0, np.floor((CHROMA_QTABLE * s + 50.0) / 100.0))
    return luma, chroma


def _rgb_to_ycbcr(img: np.ndarray) -> np.ndarray:
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return np.stack([y, cb, cr], axis=2)


def _ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc[:, :, 0], ycc[:, :, 1], ycc[:, :, 2]
    r = y + 1.402 * (cr - 128.0)
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
    b = y + 1.772 * (cb - 128.0)
    return np.stack([r, g, b], axis=2)


def _quantize_plane(plane: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    h8, w8 = -(-h // 8) * 8, -(-w // 8) * 8
    padded = np.pad(plane, ((0, h8 - h), (0, w8 - w)), mode="edge") - 128.0
    blocks = padded.reshape(h8 // 8, 8, w8 // 8, 8).transpose(0, 2, 1, 3)
    coeffs = dctn(blocks, axes=(2, 3), norm="ortho")
    coeffs = np.round(coeffs / table) * table
    blocks = idctn(coeffs, axes=(2, 3), norm="ortho")
    out = blocks.transpose(0, 2, 1, 3).reshape(h8, w8) + 128.0
    return out[:h, :w]


def _jpeg_like(img, quality):
    luma_q, chroma_q = quantization_tables(int(quality))
    ycc = _rgb_to_ycbcr(img.astype(np.float64))
    out = np.empty_like(ycc)
    out[:, :, 0] = _quantize_plane(ycc[:, :, 0], luma_q)
    out[:, :, 1] = _quantize_plane(ycc[:, :, 1], chroma_q)
    out[:, :, 2] = _quantize_plane(ycc[:, :, 2], chroma_q)
    return _clamp_u8(_ycbcr_to_rgb(out))


def apply(image: np.ndarray, spec: DistortionSpec) -> np.ndarray:
    """Apply one distortion step; deterministic including the seed."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise PreconditionError("expected a (H, W, 3) uint8 image")
    p = spec.params
    if spec.kind == "gauss_noise_rgb":
        return _gauss_noise_rgb(img, p["sigma"], spec.seed)
    if spec.kind == "gauss_noise_luma":
        return _gauss_noise_luma(img, p["sigma"], spec.seed)
    if spec.kind == "blur":
        return _blur(img, p["sigma"])
    if spec.kind == "posterize":
        return _posterize(img, int(p["levels"]))
    if spec.kind == "gamma":
        return _gamma(img, p["gamma"])
    if spec.kind == "contrast_rescale":
        return _contrast_rescale(img, p["lo"], p["hi"])
    if spec.kind == "jpeg_like":
        return _jpeg_like(img, p["quality"])
    raise PreconditionError(f"unknown kind {spec.kind!r}")


def apply_pipeline(image: np.ndarray, pipeline: PipelineSpec) -> np.ndarray:
    out = np.asarray(image)
    for step in pipeline.steps:
        out = apply(out, step)
    return out


def sample_pipeline(seed: int, max_len: int = 4) -> PipelineSpec:
    """Draw a random distortion sequence: length uniform in [1, max_len],
    kinds uniform with replacement, parameters uniform over their ranges."""
    if max_len < 1:
        raise PreconditionError("max_len must be >= 1")
    rng = np.random.default_rng(seed)
    length = int(rng.integers(1, max_len + 1))
    steps = []
    for _ in range(length):
        kind = KINDS[int(rng.integers(len(KINDS)))]
        step_seed = int(rng.integers(0, 2**63))
        if kind in ("gauss_noise_rgb", "gauss_noise_luma"):
            params = {"sigma": float(rng.uniform(1.0, 50.0))}
        elif kind == "blur":
            params = {"sigma": float(rng.uniform(0.5, 6.0))}
        elif kind == "posterize":
            params = {"levels": int(rng.integers(2, 33))}
        elif kind == "gamma":
            params = {"gamma": float(rng.uniform(0.5, 2.2))}
        elif kind == "contrast_rescale":
            params = {"lo": float(rng.uniform(0.0, 64.0)), "hi": float(rng.uniform(192.0, 255.0))}
        else:  # jpeg_like
            params = {"quality": int(rng.integers(10, 96))}
        steps.append(DistortionSpec(kind=kind, params=params, seed=step_seed))
    return PipelineSpec(steps=tuple(steps), master_seed=seed)


def random_crop(image: np.ndarray, seed: int, size: int = CROP_SIZE) -> np.ndarray:
    img = np.asarray(image)
    h, w = img.shape[:2]
    if h < size or w < size:
        raise PreconditionError(f"image {h}x{w} too small for a {size}x{size} crop")
    rng = np.random.default_rng(seed)
    y = int(rng.integers(0, h - size + 1))
    x = int(rng.integers(0, w - size + 1))
    return img[y : y + size, x : x + size].copy()


def make_triplets(reference_paths, out_dir, seed: int = 0, max_len: int = 4, size: int = CROP_SIZE):
    """Synthesize (O, A, B) triplets: two independent random pipelines per
    reference, all three images cropped at the same random position.

    Writes PPM files and returns the triplet records (vote counts zeroed,
    to be filled by external annotation).
    """
    refs = list(reference_paths)
    if not refs:
        raise PreconditionError("no reference images given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    root = np.random.SeedSequence(seed)
    for index, (path, seq) in enumerate(zip(refs, root.spawn(len(refs)))):
        try:
            ref = read_ppm(path)
        except OSError as exc:
            raise DataError(f"cannot read reference {path}: {exc}") from exc
        seed_a, seed_b, seed_crop = (int(s.generate_state(1)[0]) for s in seq.spawn(3))
        img_a = apply_pipeline(ref, sample_pipeline(seed_a, max_len=max_len))
        img_b = apply_pipeline(ref, sample_pipeline(seed_b, max_len=max_len))
        crop_rng = np.random.default_rng(seed_crop)
        h, w = ref.shape[:2]
        if h < size or w < size:
            raise DataError(f"reference {path} is {h}x{w}, smaller than {size}x{size}")
        y = int(crop_rng.integers(0, h - size + 1))
        x = int(crop_rng.integers(0, w - size + 1))
        names = {}
        for tag, img in (("ref", ref), ("a", img_a), ("b", img_b)):
            name = f"triplet{index:05d}_{tag}.ppm"
            write_ppm(out_dir / name, img[y : y + size, x : x + size])
            names[tag] = name
        records.append(
            {
                "ref": names["ref"],
                "a": names["a"],
                "b": names["b"],
                "votes_a": 0,
                "votes_b": 0,
                "votes_unsure": 0,
            }
        )
    with open(out_dir / "triplets.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return records
