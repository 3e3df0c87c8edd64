import numpy as np
import pytest
from scipy.fft import dctn

from conftest import random_image, textured_image
from vggmetric.distort import (
    KINDS,
    DistortionSpec,
    PipelineSpec,
    apply,
    apply_pipeline,
    make_triplets,
    quantization_tables,
    random_crop,
    sample_pipeline,
)
from vggmetric.errors import PreconditionError
from vggmetric.ppm import write_ppm


@pytest.fixture
def img():
    return textured_image(48, 56)


def test_gamma_identity(img):
    assert np.array_equal(apply(img, DistortionSpec("gamma", {"gamma": 1.0})), img)


def test_posterize_identity(img):
    assert np.array_equal(apply(img, DistortionSpec("posterize", {"levels": 256})), img)


def test_posterize_two_levels(img):
    out = apply(img, DistortionSpec("posterize", {"levels": 2}))
    assert set(np.unique(out)) <= {64, 192}


def test_noise_sigma_zero_identity(img):
    for kind in ("gauss_noise_rgb", "gauss_noise_luma"):
        assert np.array_equal(apply(img, DistortionSpec(kind, {"sigma": 0.0}, seed=5)), img)


def test_contrast_full_range_identity(img):
    spec = DistortionSpec("contrast_rescale", {"lo": 0, "hi": 255})
    assert np.array_equal(apply(img, spec), img)


def test_contrast_stretch():
    img = np.full((8, 8, 3), 128, dtype=np.uint8)
    out = apply(img, DistortionSpec("contrast_rescale", {"lo": 64, "hi": 192}))
    assert (out == 128).all()
    dark = np.full((8, 8, 3), 10, dtype=np.uint8)
    assert (apply(dark, DistortionSpec("contrast_rescale", {"lo": 64, "hi": 192})) == 0).all()


def test_noise_deterministic(img):
    spec = DistortionSpec("gauss_noise_rgb", {"sigma": 30.0}, seed=123)
    assert np.array_equal(apply(img, spec), apply(img, spec))


def test_luma_noise_correlated_across_channels():
    img = np.full((16, 16, 3), 128, dtype=np.uint8)
    out = apply(img, DistortionSpec("gauss_noise_luma", {"sigma": 10.0}, seed=1)).astype(int)
    delta = out - 128
    assert np.array_equal(delta[:, :, 0], delta[:, :, 1])
    assert np.array_equal(delta[:, :, 0], delta[:, :, 2])


def test_blur_preserves_constant():
    img = np.full((20, 20, 3), 77, dtype=np.uint8)
    assert np.array_equal(apply(img, DistortionSpec("blur", {"sigma": 2.0})), img)


def test_blur_smooths(img):
    out = apply(img, DistortionSpec("blur", {"sigma": 3.0})).astype(np.float64)
    orig = img.astype(np.float64)
    assert np.abs(np.diff(out, axis=1)).mean() < np.abs(np.diff(orig, axis=1)).mean()


def test_jpeg_constant_image_identity_q100():
    img = np.full((24, 24, 3), 90, dtype=np.uint8)
    out = apply(img, DistortionSpec("jpeg_like", {"quality": 100}))
    assert np.array_equal(out, img)


def test_jpeg_constant_blocks_are_dc_only():
    # oracle: a constant block has zero AC coefficients, so any quantizer
    # with q >= 1 leaves DC intact at Q=100 (all table entries are 1)
    luma, chroma = quantization_tables(100)
    assert (luma == 1).all() and (chroma == 1).all()
    block = np.full((8, 8), 42.0)
    coeffs = dctn(block - 128.0, norm="ortho")
    assert np.abs(coeffs[1:, :]).max() < 1e-9
    assert np.abs(coeffs[:, 1:]).max() < 1e-9


def test_jpeg_error_monotone_in_quality():
    img = textured_image(64, 64)
    errors = []
    for q in (10, 30, 50, 70, 90):
        out = apply(img, DistortionSpec("jpeg_like", {"quality": q}))
        errors.append(float(((out.astype(float) - img.astype(float)) ** 2).sum()))
    assert all(a >= b for a, b in zip(errors, errors[1:]))


def test_quantization_table_scaling():
    luma50, _ = quantization_tables(50)
    assert luma50[0, 0] == 16  # s = 100 leaves the table unchanged
    luma10, _ = quantization_tables(10)
    assert (luma10 >= luma50).all()


def test_invalid_params_rejected():
    with pytest.raises(PreconditionError):
        DistortionSpec("posterize", {"levels": 1})
    with pytest.raises(PreconditionError):
        DistortionSpec("gamma", {"gamma": 0.0})
    with pytest.raises(PreconditionError):
        DistortionSpec("contrast_rescale", {"lo": 100, "hi": 100})
    with pytest.raises(PreconditionError):
        DistortionSpec("jpeg_like", {"quality": 0})
    with pytest.raises(PreconditionError):
        DistortionSpec("nonsense", {})


def test_output_range(img):
    pipeline = sample_pipeline(999, max_len=4)
    out = apply_pipeline(img, pipeline)
    assert out.dtype == np.uint8
    assert out.min() >= 0 and out.max() <= 255


def test_sample_pipeline_deterministic():
    a = sample_pipeline(42, max_len=5)
    b = sample_pipeline(42, max_len=5)
    assert a.to_json() == b.to_json()


def test_sample_pipeline_max_len_one():
    assert len(sample_pipeline(7, max_len=1).steps) == 1


def test_sample_pipeline_kind_frequencies_uniform():
    counts = {k: 0 for k in KINDS}
    n = 10000
    draws = 0
    for seed in range(n):
        for step in sample_pipeline(seed, max_len=1).steps:
            counts[step.kind] += 1
            draws += 1
    p = 1.0 / len(KINDS)
    sigma = np.sqrt(draws * p * (1 - p))
    for k in KINDS:
        assert abs(counts[k] - draws * p) < 3 * sigma


def test_pipeline_json_round_trip():
    pipe = sample_pipeline(11, max_len=3)
    assert PipelineSpec.from_json(pipe.to_json()).to_json() == pipe.to_json()


def test_random_crop_exact_size_identity():
    img = random_image(np.random.default_rng(0), 224, 224)
    assert np.array_equal(random_crop(img, seed=5), img)


def test_random_crop_matches_source_region():
    img = random_image(np.random.default_rng(1), 300, 280)
    crop = random_crop(img, seed=8, size=224)
    # locate the crop by its first row
    matches = [
        (y, x)
        for y in range(300 - 223)
        for x in range(280 - 223)
        if np.array_equal(img[y, x : x + 224], crop[0])
    ]
    assert any(np.array_equal(img[y : y + 224, x : x + 224], crop) for y, x in matches)


def test_random_crop_too_small():
    with pytest.raises(PreconditionError):
        random_crop(random_image(np.random.default_rng(2), 100, 100), seed=0)


def _write_refs(tmp_path, n, size=64):
    refs = tmp_path / "refs"
    refs.mkdir()
    rng = np.random.default_rng(0)
    for i in range(n):
        write_ppm(refs / f"ref{i}.ppm", random_image(rng, size + 8, size + 16))
    return refs


def test_make_triplets_single_reference(tmp_path):
    refs = _write_refs(tmp_path, 1)
    out = tmp_path / "out"
    records = make_triplets(sorted(refs.glob("*.ppm")), out, seed=3, size=64)
    assert len(records) == 1
    files = sorted(p.name for p in out.glob("*.ppm"))
    assert files == ["triplet00000_a.ppm", "triplet00000_b.ppm", "triplet00000_ref.ppm"]
    assert (out / "triplets.jsonl").exists()


def test_make_triplets_deterministic(tmp_path):
    refs = _write_refs(tmp_path, 2)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    make_triplets(sorted(refs.glob("*.ppm")), out1, seed=7, size=64)
    make_triplets(sorted(refs.glob("*.ppm")), out2, seed=7, size=64)
    for p1 in sorted(out1.iterdir()):
        assert p1.read_bytes() == (out2 / p1.name).read_bytes()


def test_make_triplets_distorted_differ(tmp_path):
    refs = _write_refs(tmp_path, 4)
    out = tmp_path / "out"
    make_triplets(sorted(refs.glob("*.ppm")), out, seed=1, size=64)
    from vggmetric.ppm import read_ppm

    any_a_differs = any_b_differs = False
    for i in range(4):
        ref = read_ppm(out / f"triplet{i:05d}_ref.ppm")
        a = read_ppm(out / f"triplet{i:05d}_a.ppm")
        b = read_ppm(out / f"triplet{i:05d}_b.ppm")
        any_a_differs |= not np.array_equal(ref, a)
        any_b_differs |= not np.array_equal(ref, b)
    assert any_a_differs and any_b_differs
