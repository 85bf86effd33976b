"""Per-pixel illumination emphasis weights.

The mirror loss weighs feature discrepancies by how dark the corresponding
input pixel is: luminance of the low-light input is min-max normalized per
image and mapped linearly so the darkest pixels get weight 1+beta and the
brightest get 1.0. Weights carry no gradient; they are derived from the
fixed input image and resized (bilinear) down to each decoder scale.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor

from .errors import ChannelCountError, NegativeBeta

# BT.601 luma coefficients, sum to 1.
LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 0.114

DEFAULT_BETA = 0.6


def luminance_map(image: Tensor) -> Tensor:
    """Per-pixel luminance of an RGB batch (B,3,H,W) -> (B,1,H,W)."""
    if image.ndim != 4 or image.shape[1] != 3:
        raise ChannelCountError(
            f"expected (B,3,H,W) RGB tensor, got shape {tuple(image.shape)}"
        )
    r, g, b = image[:, 0:1], image[:, 1:2], image[:, 2:3]
    return LUMA_R * r + LUMA_G * g + LUMA_B * b


def normalize_luminance(lum: Tensor) -> Tensor:
    """Min-max normalize per image over spatial positions.

    Degenerate (constant) images map to 0.5 everywhere: min-max is undefined
    there and a neutral value avoids giving flat frames maximal emphasis.
    """
    flat = lum.reshape(lum.shape[0], -1)
    lo = flat.min(dim=1).values.view(-1, 1, 1, 1)
    hi = flat.max(dim=1).values.view(-1, 1, 1, 1)
    span = hi - lo
    safe = torch.where(span > 0, span, torch.ones_like(span))
    out = (lum - lo) / safe
    return torch.where(span.expand_as(lum) > 0, out, torch.full_like(out, 0.5))


def emphasis_weights(lum_norm: Tensor, beta: float = DEFAULT_BETA) -> Tensor:
    """W = 1 + beta * (1 - normalized luminance), so dark pixels get up to 1+beta."""
    if beta < 0:
        raise NegativeBeta(f"beta must be >= 0, got {beta}")
    return 1.0 + beta * (1.0 - lum_norm)


def resize_weights(weights: Tensor, target_h: int, target_w: int) -> Tensor:
    """Bilinear resize of a (B,1,H,W) weight map to target spatial dims.

    Bilinear output is a convex combination of inputs, so values stay within
    the source range [1, 1+beta].
    """
    if weights.shape[-2] == target_h and weights.shape[-1] == target_w:
        return weights
    return F.interpolate(
        weights, size=(target_h, target_w), mode="bilinear", align_corners=False
    )


def weights_from_image(image: Tensor, beta: float = DEFAULT_BETA) -> Tensor:
    """Full chain: RGB image -> emphasis weight map, detached from autograd."""
    with torch.no_grad():
        return emphasis_weights(normalize_luminance(luminance_map(image)), beta)
