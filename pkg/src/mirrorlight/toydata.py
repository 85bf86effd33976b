"""Synthetic paired low/normal-light data in the canonical layout.

Real benchmark archives cannot be bundled, so tests and demo scripts
generate small stand-in datasets: smooth colourful "clean" images and a
darkened, lightly noised "low" counterpart. The darkening is a simple
per-image scale, which a small model can learn to invert quickly.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np


def _smooth_pattern(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Random mixture of 2-D sinusoids per channel, mapped into [0.2, 0.9]."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy /= max(h, 1)
    xx /= max(w, 1)
    img = np.zeros((h, w, 3), dtype=np.float64)
    for c in range(3):
        acc = np.zeros((h, w))
        for _ in range(3):
            fy, fx = rng.uniform(0.5, 3.0, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            acc += np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
        acc -= acc.min()
        rng_span = acc.max() if acc.max() > 0 else 1.0
        img[:, :, c] = 0.2 + 0.7 * acc / rng_span
    return img


def _illumination_field(
    rng: np.random.Generator, h: int, w: int, lo: float, hi: float
) -> np.ndarray:
    """Smooth spatially-varying darkening in [lo, hi], like uneven exposure."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy /= max(h, 1)
    xx /= max(w, 1)
    fy, fx = rng.uniform(0.5, 1.5, size=2)
    phase = rng.uniform(0, 2 * np.pi)
    field = 0.5 * (1 + np.sin(2 * np.pi * (fy * yy + fx * xx) + phase))
    return (lo + (hi - lo) * field)[:, :, None]


def make_pair(
    rng: np.random.Generator,
    h: int,
    w: int,
    noise_sigma: float = 0.003,
    field_range: tuple[float, float] = (0.06, 0.30),
    spatial_field: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    # the enhancement mapping amplifies sensor noise by roughly 1/scale,
    # which bounds the PSNR any model can reach on this data
    clean = _smooth_pattern(rng, h, w)
    if spatial_field:
        field = _illumination_field(rng, h, w, *field_range)
    else:
        field = rng.uniform(*field_range)
    noise = rng.normal(0.0, noise_sigma, size=clean.shape)
    low = np.clip(clean * field + noise, 0.0, 1.0)
    return low, clean


def _write_png(path: Path, img: np.ndarray) -> None:
    arr = (np.clip(img, 0, 1) * 255.0).round().astype(np.uint8)
    cv2.imwrite(str(path), cv2.cvtColor(arr, cv2.COLOR_RGB2BGR))


def make_toy_dataset(
    root: str | Path,
    n_train: int = 8,
    n_val: int = 2,
    size: int = 64,
    seed: int = 0,
    noise_sigma: float = 0.003,
    field_range: tuple[float, float] = (0.06, 0.30),
    spatial_field: bool = True,
) -> Path:
    """Create <root>/{train,val}/{low,high}/NNNN.png and return root."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for split, count in (("train", n_train), ("val", n_val)):
        low_dir = root / split / "low"
        high_dir = root / split / "high"
        low_dir.mkdir(parents=True, exist_ok=True)
        high_dir.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            low, clean = make_pair(
                rng,
                size,
                size,
                noise_sigma=noise_sigma,
                field_range=field_range,
                spatial_field=spatial_field,
            )
            name = f"{i:04d}.png"
            _write_png(low_dir / name, low)
            _write_png(high_dir / name, clean)
    return root
