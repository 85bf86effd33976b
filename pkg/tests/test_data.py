import cv2
import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorlight.data import (
    discover_pairs,
    flip_augment,
    load_image,
    random_crop_pair,
    save_image,
)
from mirrorlight.errors import (
    CropTooLarge,
    DecodeError,
    DimensionMismatch,
    EmptySplit,
    MissingDirectory,
    NonRGBError,
)
from mirrorlight.toydata import make_toy_dataset


def write_png(path, arr):
    cv2.imwrite(str(path), cv2.cvtColor(arr, cv2.COLOR_RGB2BGR))


def make_split(root, split, names, size=(6, 8)):
    low = root / split / "low"
    high = root / split / "high"
    low.mkdir(parents=True)
    high.mkdir(parents=True)
    h, w = size
    for n in names:
        arr = np.random.default_rng(0).integers(0, 255, (h, w, 3), dtype=np.uint8)
        write_png(low / f"{n}.png", arr)
        write_png(high / f"{n}.png", arr)


def test_discovery_full_dataset_counts(tmp_path):
    # canonical paired-benchmark layout: 485 training pairs, 15 eval pairs
    root = make_toy_dataset(tmp_path, n_train=485, n_val=15, size=8, seed=0)
    assert len(discover_pairs(root, "train")) == 485
    assert len(discover_pairs(root, "val")) == 15


def test_discovery_sorted_and_matched(tmp_path):
    make_split(tmp_path, "train", ["b", "a", "c"])
    recs = discover_pairs(tmp_path, "train")
    assert [r.pair_id for r in recs] == ["a", "b", "c"]
    assert all(r.low_path.exists() and r.clean_path.exists() for r in recs)


def test_discovery_warns_on_unmatched(tmp_path, caplog):
    make_split(tmp_path, "train", ["a", "b"])
    extra = tmp_path / "train" / "low" / "orphan.png"
    write_png(extra, np.zeros((6, 8, 3), dtype=np.uint8))
    with caplog.at_level("WARNING"):
        recs = discover_pairs(tmp_path, "train")
    assert [r.pair_id for r in recs] == ["a", "b"]
    assert any("orphan" in m for m in caplog.messages)


def test_discovery_missing_directory(tmp_path):
    with pytest.raises(MissingDirectory):
        discover_pairs(tmp_path, "train")


def test_discovery_empty_split(tmp_path):
    (tmp_path / "train" / "low").mkdir(parents=True)
    (tmp_path / "train" / "high").mkdir(parents=True)
    with pytest.raises(EmptySplit):
        discover_pairs(tmp_path, "train")


def test_discovery_dimension_mismatch(tmp_path):
    low = tmp_path / "train" / "low"
    high = tmp_path / "train" / "high"
    low.mkdir(parents=True)
    high.mkdir(parents=True)
    write_png(low / "a.png", np.zeros((6, 8, 3), dtype=np.uint8))
    write_png(high / "a.png", np.zeros((6, 9, 3), dtype=np.uint8))
    with pytest.raises(DimensionMismatch):
        discover_pairs(tmp_path, "train")


def test_load_8bit_scaling(tmp_path):
    arr = np.zeros((4, 4, 3), dtype=np.uint8)
    arr[..., 0], arr[..., 1], arr[..., 2] = 51, 102, 153
    write_png(tmp_path / "x.png", arr)
    img = load_image(tmp_path / "x.png")
    assert tuple(img.shape) == (1, 3, 4, 4)
    assert img.dtype == torch.float32
    assert img[0, 0].mean().item() == pytest.approx(51 / 255)
    assert img[0, 1].mean().item() == pytest.approx(102 / 255)
    assert img[0, 2].mean().item() == pytest.approx(153 / 255)


def test_load_16bit_scaling(tmp_path):
    arr = np.full((4, 4, 3), 13107, dtype=np.uint16)  # 13107/65535 = 0.2
    cv2.imwrite(str(tmp_path / "x.png"), arr)
    img = load_image(tmp_path / "x.png")
    assert img.mean().item() == pytest.approx(0.2, abs=1e-6)


def test_load_alpha_dropped_with_warning(tmp_path, caplog):
    arr = np.random.default_rng(1).integers(0, 255, (4, 4, 4), dtype=np.uint8)
    cv2.imwrite(str(tmp_path / "x.png"), arr)
    with caplog.at_level("WARNING"):
        img = load_image(tmp_path / "x.png")
    assert tuple(img.shape) == (1, 3, 4, 4)
    assert any("alpha" in m for m in caplog.messages)


def test_load_grayscale_rejected(tmp_path):
    cv2.imwrite(str(tmp_path / "g.png"), np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(NonRGBError):
        load_image(tmp_path / "g.png")


def test_load_undecodable_rejected(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"this is not a png")
    with pytest.raises(DecodeError):
        load_image(bad)


def test_save_load_roundtrip(tmp_path):
    g = torch.Generator().manual_seed(2)
    img = torch.rand(1, 3, 8, 8, generator=g)
    save_image(tmp_path / "y.png", img)
    back = load_image(tmp_path / "y.png")
    # 8-bit quantization error is at most half a step
    assert (back - img).abs().max().item() <= 0.5 / 255 + 1e-6


def test_random_crop_alignment(rng):
    base = torch.arange(16 * 16, dtype=torch.float32).reshape(1, 1, 16, 16)
    low = base.repeat(1, 3, 1, 1)
    clean = low + 1000  # distinct but spatially aligned content
    lc, cc = random_crop_pair(low, clean, 8, rng)
    assert tuple(lc.shape) == (1, 3, 8, 8)
    assert torch.equal(cc - lc, torch.full_like(lc, 1000.0))


def test_random_crop_too_large(rng):
    with pytest.raises(CropTooLarge):
        random_crop_pair(torch.rand(1, 3, 8, 8), torch.rand(1, 3, 8, 8), 16, rng)


def test_random_crop_deterministic_under_seed():
    imgs = torch.rand(1, 3, 32, 32), torch.rand(1, 3, 32, 32)
    g1 = torch.Generator().manual_seed(99)
    g2 = torch.Generator().manual_seed(99)
    a = random_crop_pair(*imgs, 16, g1)
    b = random_crop_pair(*imgs, 16, g2)
    assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_flips_stay_aligned(seed):
    g = torch.Generator().manual_seed(seed)
    low = torch.rand(1, 3, 8, 8, generator=g)
    clean = low * 2.0  # exact pixelwise relationship survives any flip
    lf, cf = flip_augment(low, clean, g)
    assert torch.equal(cf, lf * 2.0)
    assert lf.shape == low.shape


def test_flip_shape_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        flip_augment(torch.rand(1, 3, 8, 8), torch.rand(1, 3, 8, 9), rng)
