"""Illumination-weighted mirror loss between decoder feature pyramids.

Student and teacher decode in different illumination domains, so raw
activations occupy different dynamic ranges. Each feature map is therefore
standardized per (sample, channel) over its spatial positions before the
weighted L1 comparison; the teacher side is gradient-stopped. Per-level
losses are averaged across all decoder scales.
"""

from __future__ import annotations

import torch
from torch import Tensor

from .errors import PyramidDepthMismatch, ShapeMismatch
from .luminance import resize_weights

DEFAULT_EPS = 1e-6


def standardize_features(f: Tensor, eps: float = DEFAULT_EPS) -> Tensor:
    """Zero-mean unit-std per (sample, channel) group over spatial positions.

    Population std; eps added outside the std so constant groups map to ~0
    instead of dividing by zero.
    """
    groups = f.reshape(f.shape[0], f.shape[1], -1)
    mean = groups.mean(dim=2, keepdim=True)
    std = groups.std(dim=2, unbiased=False, keepdim=True)
    out = (groups - mean) / (std + eps)
    return out.reshape(f.shape)


def iaml_level(fs: Tensor, ft: Tensor, wi: Tensor, eps: float = DEFAULT_EPS) -> Tensor:
    """Weighted L1 between standardized student/teacher features at one scale.

    wi is a (B,1,h,w) weight map broadcast over channels; the average runs
    over every element (batch, channel, spatial). Gradient flows only
    through fs.
    """
    if fs.shape != ft.shape:
        raise ShapeMismatch(f"student {tuple(fs.shape)} vs teacher {tuple(ft.shape)}")
    if wi.shape[-2:] != fs.shape[-2:]:
        raise ShapeMismatch(
            f"weight map {tuple(wi.shape[-2:])} vs features {tuple(fs.shape[-2:])}"
        )
    fs_n = standardize_features(fs, eps)
    ft_n = standardize_features(ft, eps).detach()
    return (wi * (fs_n - ft_n).abs()).mean()


def iaml_total(
    pyr_s: list[Tensor],
    pyr_t: list[Tensor],
    weights: Tensor,
    eps: float = DEFAULT_EPS,
    levels: list[int] | None = None,
) -> tuple[Tensor, list[Tensor]]:
    """Mean mirror loss across decoder levels, plus per-level terms.

    weights is the full-resolution (B,1,H,W) emphasis map; it is resized to
    each level's spatial dims. levels selects a subset by index into the
    pyramid, 0 = coarsest (default: all levels).
    """
    if len(pyr_s) != len(pyr_t):
        raise PyramidDepthMismatch(f"{len(pyr_s)} student vs {len(pyr_t)} teacher levels")
    if not pyr_s:
        raise PyramidDepthMismatch("empty feature pyramid")
    selected = range(len(pyr_s)) if levels is None else levels
    per_level = []
    for i in selected:
        fs, ft = pyr_s[i], pyr_t[i]
        wi = resize_weights(weights, fs.shape[-2], fs.shape[-1])
        per_level.append(iaml_level(fs, ft, wi, eps))
    total = torch.stack(per_level).mean()
    return total, per_level
