"""Paired low-light / normal-light dataset handling.

Canonical layout: ``<root>/<split>/low/`` and ``<root>/<split>/high/``,
pairs matched by filename stem. LOL-style archives ship with assorted
folder names (eg. Low/Normal, low/high); arrange them into this layout
once and everything downstream is dataset-agnostic.

Loading and augmentation are pure given an explicit torch.Generator, so
they can run on parallel workers as long as each worker derives its own
stream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
import torch
from PIL import Image
from torch import Tensor

from .errors import (
    CropTooLarge,
    DecodeError,
    DimensionMismatch,
    EmptySplit,
    MissingDirectory,
    NonRGBError,
)

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}


@dataclass(frozen=True)
class PairRecord:
    low_path: Path
    clean_path: Path
    pair_id: str


def _image_files(directory: Path) -> dict[str, Path]:
    files = {}
    for p in sorted(directory.iterdir()):
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS:
            files[p.stem] = p
    return files


def _header_size(path: Path) -> tuple[int, int]:
    # PIL reads only the header here, no pixel decode.
    with Image.open(path) as im:
        w, h = im.size
    return h, w


def discover_pairs(root: str | Path, split: str) -> list[PairRecord]:
    """Find matched low/high pairs under <root>/<split>, sorted by pair id.

    Unmatched files on either side are reported via logging; paired images
    with unequal dimensions raise DimensionMismatch.
    """
    root = Path(root)
    low_dir = root / split / "low"
    high_dir = root / split / "high"
    for d in (low_dir, high_dir):
        if not d.is_dir():
            raise MissingDirectory(f"expected directory {d}")

    low = _image_files(low_dir)
    high = _image_files(high_dir)
    shared = sorted(set(low) & set(high))
    for stem in sorted(set(low) - set(high)):
        log.warning("unmatched low-light file (no clean counterpart): %s", low[stem])
    for stem in sorted(set(high) - set(low)):
        log.warning("unmatched clean file (no low-light counterpart): %s", high[stem])
    if not shared:
        raise EmptySplit(f"no matched pairs under {root / split}")

    records = []
    for stem in shared:
        lo, hi = low[stem], high[stem]
        size_lo, size_hi = _header_size(lo), _header_size(hi)
        if size_lo != size_hi:
            raise DimensionMismatch(
                f"pair {stem!r}: low is {size_lo[0]}x{size_lo[1]}, "
                f"clean is {size_hi[0]}x{size_hi[1]}"
            )
        records.append(PairRecord(low_path=lo, clean_path=hi, pair_id=stem))
    return records


def load_image(path: str | Path) -> Tensor:
    """Decode an 8- or 16-bit RGB image to a (1,3,H,W) float32 tensor in [0,1].

    Alpha channels are dropped with a warning; grayscale inputs are rejected.
    """
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DecodeError(f"could not decode image {path}")
    if raw.ndim == 2:
        raise NonRGBError(f"grayscale image not supported: {path}")
    if raw.shape[2] == 4:
        log.warning("dropping alpha channel of %s", path)
        raw = raw[:, :, :3]
    if raw.shape[2] != 3:
        raise NonRGBError(f"expected 3 channels, got {raw.shape[2]}: {path}")

    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise DecodeError(f"unsupported pixel dtype {raw.dtype}: {path}")

    rgb = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB).astype(np.float32) / scale
    return torch.from_numpy(rgb).permute(2, 0, 1).unsqueeze(0)


def save_image(path: str | Path, image: Tensor) -> None:
    """Write a (1,3,H,W) or (3,H,W) tensor in [0,1] as an 8-bit image file."""
    if image.ndim == 4:
        image = image[0]
    arr = (image.clamp(0, 1) * 255.0).round().to(torch.uint8)
    bgr = cv2.cvtColor(arr.permute(1, 2, 0).numpy(), cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), bgr):
        raise OSError(f"failed to write image {path}")


def random_crop_pair(
    low: Tensor, clean: Tensor, size: int, rng: torch.Generator
) -> tuple[Tensor, Tensor]:
    """Crop the same random size x size window out of both images."""
    if low.shape != clean.shape:
        raise DimensionMismatch(
            f"low {tuple(low.shape)} vs clean {tuple(clean.shape)}"
        )
    h, w = low.shape[-2], low.shape[-1]
    if h < size or w < size:
        raise CropTooLarge(f"image {h}x{w} smaller than crop size {size}")
    top = int(torch.randint(0, h - size + 1, (1,), generator=rng))
    left = int(torch.randint(0, w - size + 1, (1,), generator=rng))
    window = (..., slice(top, top + size), slice(left, left + size))
    return low[window], clean[window]


def flip_augment(
    low: Tensor, clean: Tensor, rng: torch.Generator
) -> tuple[Tensor, Tensor]:
    """Apply horizontal / vertical flips, each with probability 0.5, to both."""
    if low.shape != clean.shape:
        raise DimensionMismatch(
            f"low {tuple(low.shape)} vs clean {tuple(clean.shape)}"
        )
    draws = torch.rand(2, generator=rng)
    if draws[0] < 0.5:
        low, clean = low.flip(-1), clean.flip(-1)
    if draws[1] < 0.5:
        low, clean = low.flip(-2), clean.flip(-2)
    return low, clean
