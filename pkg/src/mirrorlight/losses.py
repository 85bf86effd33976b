"""Reconstruction and distillation losses, and the total-loss combiner.

Five configurations are supported, selected by tag:

    mse_only        L = mse
    mse_ssim        L = mse + (1 - ssim)
    mse_ssim_cos    L = mse + (1 - ssim) + lambda * cosine mirror
    mse_ssim_stdl1  L = mse + (1 - ssim) + lambda * standardized L1 mirror
    mse_ssim_iaml   L = mse + (1 - ssim) + lambda * illumination-weighted mirror

All mirror variants gradient-stop the teacher branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor

from .errors import ImageTooSmall, ShapeMismatch, UnknownConfigTag
from .mirror import iaml_total, standardize_features

CONFIG_TAGS = ("mse_only", "mse_ssim", "mse_ssim_cos", "mse_ssim_stdl1", "mse_ssim_iaml")
DEFAULT_LAMBDA = 0.8


@dataclass
class SsimParams:
    window_size: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


@dataclass
class LossBreakdown:
    """Scalar record of one loss evaluation. Components are 0-dim tensors so
    total can be backpropagated; unused components are zero."""

    mse: Tensor
    ssim_loss: Tensor
    mirror: Tensor
    mirror_per_level: list[Tensor]
    total: Tensor
    config_tag: str = "mse_ssim_iaml"

    def scalars(self) -> dict:
        out = {
            "mse": self.mse.detach().item(),
            "ssim_loss": self.ssim_loss.detach().item(),
            "mirror": self.mirror.detach().item(),
            "total": self.total.detach().item(),
            "config_tag": self.config_tag,
        }
        out["mirror_per_level"] = [v.detach().item() for v in self.mirror_per_level]
        return out


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {tuple(pred.shape)} vs target {tuple(target.shape)}")
    return ((pred - target) ** 2).mean()


def _gaussian_window(size: int, sigma: float, dtype, device) -> Tensor:
    coords = torch.arange(size, dtype=dtype, device=device) - (size - 1) / 2
    g = torch.exp(-(coords**2) / (2 * sigma**2))
    g = g / g.sum()
    return (g[:, None] @ g[None, :]).view(1, 1, size, size)


def ssim_index(x: Tensor, y: Tensor, params: SsimParams | None = None) -> Tensor:
    """Mean local SSIM with a Gaussian window, per channel, valid windows only.

    Borders closer than the window radius are excluded (valid convolution),
    which keeps constant inputs exactly at their closed-form value.
    """
    params = params or SsimParams()
    if x.shape != y.shape:
        raise ShapeMismatch(f"x {tuple(x.shape)} vs y {tuple(y.shape)}")
    win = params.window_size
    if x.shape[-2] < win or x.shape[-1] < win:
        raise ImageTooSmall(
            f"spatial dims {tuple(x.shape[-2:])} below window size {win}"
        )
    ch = x.shape[1]
    kernel = _gaussian_window(win, params.gaussian_sigma, x.dtype, x.device)
    kernel = kernel.expand(ch, 1, win, win)

    mu_x = F.conv2d(x, kernel, groups=ch)
    mu_y = F.conv2d(y, kernel, groups=ch)
    mu_xx, mu_yy, mu_xy = mu_x * mu_x, mu_y * mu_y, mu_x * mu_y
    sigma_x = F.conv2d(x * x, kernel, groups=ch) - mu_xx
    sigma_y = F.conv2d(y * y, kernel, groups=ch) - mu_yy
    sigma_xy = F.conv2d(x * y, kernel, groups=ch) - mu_xy

    c1, c2 = params.c1, params.c2
    ssim_map = ((2 * mu_xy + c1) * (2 * sigma_xy + c2)) / (
        (mu_xx + mu_yy + c1) * (sigma_x + sigma_y + c2)
    )
    return ssim_map.mean()


def ssim_loss(x: Tensor, y: Tensor, params: SsimParams | None = None) -> Tensor:
    return 1.0 - ssim_index(x, y, params)


def cosine_mirror_loss(pyr_s: list[Tensor], pyr_t: list[Tensor]) -> tuple[Tensor, list[Tensor]]:
    """1 - cosine similarity of per-position channel vectors, level-averaged.

    Teacher side is gradient-stopped, matching the other mirror variants.
    """
    if len(pyr_s) != len(pyr_t):
        raise ShapeMismatch(f"{len(pyr_s)} student vs {len(pyr_t)} teacher levels")
    per_level = []
    for fs, ft in zip(pyr_s, pyr_t):
        if fs.shape != ft.shape:
            raise ShapeMismatch(f"student {tuple(fs.shape)} vs teacher {tuple(ft.shape)}")
        cos = F.cosine_similarity(fs, ft.detach(), dim=1, eps=1e-8)
        per_level.append(1.0 - cos.mean())
    return torch.stack(per_level).mean(), per_level


def standardized_l1_loss(
    pyr_s: list[Tensor], pyr_t: list[Tensor], eps: float = 1e-6
) -> tuple[Tensor, list[Tensor]]:
    """Mirror loss with no illumination weighting (weight 1 everywhere)."""
    if len(pyr_s) != len(pyr_t):
        raise ShapeMismatch(f"{len(pyr_s)} student vs {len(pyr_t)} teacher levels")
    per_level = []
    for fs, ft in zip(pyr_s, pyr_t):
        if fs.shape != ft.shape:
            raise ShapeMismatch(f"student {tuple(fs.shape)} vs teacher {tuple(ft.shape)}")
        fs_n = standardize_features(fs, eps)
        ft_n = standardize_features(ft, eps).detach()
        per_level.append((fs_n - ft_n).abs().mean())
    return torch.stack(per_level).mean(), per_level


def total_loss(
    pred: Tensor,
    target: Tensor,
    pyr_s: list[Tensor] | None,
    pyr_t: list[Tensor] | None,
    weights: Tensor | None,
    lambda_: float = DEFAULT_LAMBDA,
    config_tag: str = "mse_ssim_iaml",
    ssim_params: SsimParams | None = None,
    iaml_eps: float = 1e-6,
    iaml_levels: list[int] | None = None,
) -> LossBreakdown:
    """Combine the configured components into one LossBreakdown."""
    if config_tag not in CONFIG_TAGS:
        raise UnknownConfigTag(f"unknown loss config tag {config_tag!r}")
    if lambda_ < 0:
        raise ValueError(f"lambda must be >= 0, got {lambda_}")

    zero = torch.zeros((), dtype=pred.dtype, device=pred.device)
    mse = mse_loss(pred, target)
    ssim_l = zero
    mirror = zero
    per_level: list[Tensor] = []

    if config_tag != "mse_only":
        ssim_l = ssim_loss(pred, target, ssim_params)
    if config_tag == "mse_ssim_cos":
        mirror, per_level = cosine_mirror_loss(pyr_s, pyr_t)
    elif config_tag == "mse_ssim_stdl1":
        mirror, per_level = standardized_l1_loss(pyr_s, pyr_t, iaml_eps)
    elif config_tag == "mse_ssim_iaml":
        mirror, per_level = iaml_total(pyr_s, pyr_t, weights, iaml_eps, iaml_levels)

    if config_tag == "mse_only":
        total = mse
    elif config_tag == "mse_ssim":
        total = mse + ssim_l
    else:
        total = mse + ssim_l + lambda_ * mirror

    return LossBreakdown(
        mse=mse,
        ssim_loss=ssim_l,
        mirror=mirror,
        mirror_per_level=per_level,
        total=total,
        config_tag=config_tag,
    )
