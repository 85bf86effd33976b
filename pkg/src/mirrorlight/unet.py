"""U-Net auto-encoder with CBAM attention at every scale.

The network is split into an Encoder and a Decoder module so the training
loop can run one shared encoder with two decoders (student and teacher,
structurally identical). The decoder records its post-attention feature
map at every level, coarse to fine, as the distillation pyramid.

No normalization layers anywhere: the standardization that matters happens
inside the mirror loss, and running batch statistics would make the shared
encoder's behaviour depend on which branch called it last.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
from torch import Tensor

from .errors import ConfigMismatch, IndivisibleDims


@dataclass
class BackboneConfig:
    depth: int = 4
    base_channels: int = 32
    cbam_reduction: int = 16
    cbam_spatial_kernel: int = 7

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.base_channels < 1:
            raise ValueError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.cbam_spatial_kernel % 2 != 1:
            raise ValueError("cbam_spatial_kernel must be odd")

    def level_channels(self) -> list[int]:
        """Channel widths from full resolution down to the bottleneck."""
        return [self.base_channels * (2**i) for i in range(self.depth + 1)]


@dataclass
class EncoderOutput:
    bottleneck: Tensor
    skips: list[Tensor]  # fine -> coarse


@dataclass
class DecoderOutput:
    image: Tensor
    pyramid: list[Tensor]  # coarse -> fine


# With no normalization anywhere, activations must survive many gated conv
# blocks. Convs get fan-in kaiming init, and the gate layers get a positive
# bias so attention starts close to identity instead of halving the signal.
GATE_BIAS_INIT = 2.0


def _init_conv(conv: nn.Module) -> nn.Module:
    nn.init.kaiming_normal_(conv.weight, mode="fan_in", nonlinearity="relu")
    if conv.bias is not None:
        nn.init.zeros_(conv.bias)
    return conv


class ChannelGate(nn.Module):
    def __init__(self, channels: int, reduction: int):
        super().__init__()
        hidden = max(channels // reduction, 1)
        out = nn.Conv2d(hidden, channels, 1)
        nn.init.zeros_(out.weight)
        nn.init.constant_(out.bias, GATE_BIAS_INIT)
        self.mlp = nn.Sequential(
            _init_conv(nn.Conv2d(channels, hidden, 1, bias=False)),
            nn.ReLU(inplace=True),
            out,
        )

    def forward(self, x):
        avg = self.mlp(x.mean(dim=(2, 3), keepdim=True))
        mx = self.mlp(x.amax(dim=(2, 3), keepdim=True))
        return torch.sigmoid(avg + mx)


class SpatialGate(nn.Module):
    def __init__(self, kernel_size: int):
        super().__init__()
        self.conv = nn.Conv2d(2, 1, kernel_size, padding=kernel_size // 2)
        nn.init.zeros_(self.conv.weight)
        nn.init.constant_(self.conv.bias, GATE_BIAS_INIT)

    def forward(self, x):
        pooled = torch.cat([x.mean(dim=1, keepdim=True), x.amax(dim=1, keepdim=True)], dim=1)
        return torch.sigmoid(self.conv(pooled))


class CBAM(nn.Module):
    """Sequential channel then spatial multiplicative gating, shape preserving."""

    def __init__(self, channels: int, reduction: int = 16, spatial_kernel: int = 7):
        super().__init__()
        self.channel_gate = ChannelGate(channels, reduction)
        self.spatial_gate = SpatialGate(spatial_kernel)

    def forward(self, x):
        x = x * self.channel_gate(x)
        return x * self.spatial_gate(x)


class ConvBlock(nn.Module):
    """Two 3x3 convs with ReLU followed by CBAM."""

    def __init__(self, in_ch: int, out_ch: int, cfg: BackboneConfig):
        super().__init__()
        self.body = nn.Sequential(
            _init_conv(nn.Conv2d(in_ch, out_ch, 3, padding=1)),
            nn.ReLU(inplace=True),
            _init_conv(nn.Conv2d(out_ch, out_ch, 3, padding=1)),
            nn.ReLU(inplace=True),
        )
        self.cbam = CBAM(out_ch, cfg.cbam_reduction, cfg.cbam_spatial_kernel)

    def forward(self, x):
        return self.cbam(self.body(x))


class Encoder(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        widths = cfg.level_channels()
        self.stem = ConvBlock(3, widths[0], cfg)
        self.stages = nn.ModuleList(
            ConvBlock(widths[i], widths[i + 1], cfg) for i in range(cfg.depth)
        )
        self.pool = nn.MaxPool2d(2)

    def forward(self, image: Tensor, grad_enabled: bool = True) -> EncoderOutput:
        h, w = image.shape[-2], image.shape[-1]
        div = 2**self.cfg.depth
        if h % div or w % div:
            raise IndivisibleDims(
                f"input {h}x{w} not divisible by 2^depth = {div}; pad or crop first"
            )
        with torch.set_grad_enabled(grad_enabled and torch.is_grad_enabled()):
            skips = [self.stem(image)]
            x = skips[0]
            for stage in self.stages:
                x = stage(self.pool(x))
                skips.append(x)
            bottleneck = skips.pop()
            return EncoderOutput(bottleneck=bottleneck, skips=skips)


class Decoder(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        widths = cfg.level_channels()
        self.ups = nn.ModuleList()
        self.blocks = nn.ModuleList()
        for i in range(cfg.depth, 0, -1):
            self.ups.append(
                _init_conv(nn.ConvTranspose2d(widths[i], widths[i - 1], 2, stride=2))
            )
            # upsampled features concatenated with the same-width skip
            self.blocks.append(ConvBlock(2 * widths[i - 1], widths[i - 1], cfg))
        self.head = nn.Conv2d(widths[0], 3, 1)
        nn.init.zeros_(self.head.bias)  # start at mid-gray after the sigmoid

    def forward(self, enc: EncoderOutput) -> DecoderOutput:
        if len(enc.skips) != self.cfg.depth:
            raise ConfigMismatch(
                f"encoder produced {len(enc.skips)} skips, decoder depth is {self.cfg.depth}"
            )
        x = enc.bottleneck
        pyramid = []
        for up, block, skip in zip(self.ups, self.blocks, reversed(enc.skips)):
            x = up(x)
            if x.shape[1:] != skip.shape[1:]:
                raise ConfigMismatch(
                    f"skip shape {tuple(skip.shape)} incompatible with decoder state "
                    f"{tuple(x.shape)}"
                )
            x = block(torch.cat([x, skip], dim=1))
            pyramid.append(x)
        image = torch.sigmoid(self.head(x))
        return DecoderOutput(image=image, pyramid=pyramid)


class AutoEncoder(nn.Module):
    """Convenience composition for the student path."""

    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.decoder = Decoder(cfg)

    def forward(self, image: Tensor) -> DecoderOutput:
        return self.decoder(self.encoder(image))


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
