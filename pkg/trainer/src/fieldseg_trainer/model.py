"""Spatio-temporal U-net: a 1x1 channel-reduction layer, a ResNet
encoder, a U-net decoder, and two per-pixel sigmoid heads (border and
interior masks).

Input is channels-last (batch, N, N, M*T): the M spectral bands of each
timestep are stacked band-major within the timestep, timesteps
concatenated chronologically, so channel index = t * M + b. The 1x1
convolution compresses those M*T channels to 3, after which any standard
image backbone applies; with T = 1 the model degenerates to a purely
spatial U-net over single-composite input.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
from torchvision import models

HEADS = ("border", "interior")
_BACKBONES = {18: models.resnet18, 34: models.resnet34,
              50: models.resnet50, 101: models.resnet101}
# channels of (stem, layer1..layer4) outputs per depth family
_ENC_CHANNELS = {18: (64, 64, 128, 256, 512),
                 34: (64, 64, 128, 256, 512),
                 50: (64, 256, 512, 1024, 2048),
                 101: (64, 256, 512, 1024, 2048)}


@dataclass(frozen=True)
class ModelConfig:
    input_size: int = 224
    bands: int = 3
    timesteps: int = 3
    backbone_depth: int = 50
    heads: tuple[str, ...] = HEADS
    pretrained_backbone: bool = False

    def __post_init__(self):
        if self.backbone_depth not in _BACKBONES:
            raise ValueError(f"unsupported backbone depth "
                             f"{self.backbone_depth}; choose from "
                             f"{sorted(_BACKBONES)}")
        if tuple(self.heads) != HEADS:
            raise ValueError("exactly two heads, ('border', 'interior')")
        if min(self.input_size, self.bands, self.timesteps) < 1:
            raise ValueError("input_size, bands, timesteps must be positive")
        if self.input_size % 32 != 0:
            raise ValueError("input_size must be a multiple of 32")

    @property
    def in_channels(self) -> int:
        return self.bands * self.timesteps


class _DecoderBlock(nn.Module):
    def __init__(self, in_ch: int, skip_ch: int, out_ch: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_ch + skip_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch), nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch), nn.ReLU(inplace=True))

    def forward(self, x, skip=None):
        x = nn.functional.interpolate(x, scale_factor=2, mode="nearest")
        if skip is not None:
            x = torch.cat([x, skip], dim=1)
        return self.block(x)


class STUNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.reduce = nn.Conv2d(cfg.in_channels, 3, kernel_size=1)
        weights = "DEFAULT" if cfg.pretrained_backbone else None
        resnet = _BACKBONES[cfg.backbone_depth](weights=weights)
        self.stem = nn.Sequential(resnet.conv1, resnet.bn1, resnet.relu)
        self.pool = resnet.maxpool
        self.layer1 = resnet.layer1
        self.layer2 = resnet.layer2
        self.layer3 = resnet.layer3
        self.layer4 = resnet.layer4

        c0, c1, c2, c3, c4 = _ENC_CHANNELS[cfg.backbone_depth]
        self.up4 = _DecoderBlock(c4, c3, 256)
        self.up3 = _DecoderBlock(256, c2, 128)
        self.up2 = _DecoderBlock(128, c1, 64)
        self.up1 = _DecoderBlock(64, c0, 32)
        self.up0 = _DecoderBlock(32, 0, 16)
        self.head_layers = nn.ModuleDict(
            {h: nn.Conv2d(16, 1, kernel_size=1) for h in cfg.heads})

    # Freezable encoder stages, shallowest first. freeze_policy = k in a
    # transfer plan freezes the first k of these.
    def encoder_stages(self) -> list[nn.Module]:
        return [nn.ModuleList([self.reduce, self.stem]),
                self.layer1, self.layer2, self.layer3, self.layer4]

    def forward(self, x: torch.Tensor, logits: bool = False):
        """x: (batch, N, N, M*T) channels-last. Returns a dict of
        (batch, N, N) maps per head, sigmoid probabilities unless
        `logits` is set."""
        n = self.cfg.input_size
        if x.ndim != 4 or x.shape[1:] != (n, n, self.cfg.in_channels):
            raise ValueError(f"expected input (batch, {n}, {n}, "
                             f"{self.cfg.in_channels}), got {tuple(x.shape)}")
        x = x.permute(0, 3, 1, 2)          # to channels-first
        x = self.reduce(x)                 # M*T -> 3 channels
        s0 = self.stem(x)                  # N/2
        s1 = self.layer1(self.pool(s0))    # N/4
        s2 = self.layer2(s1)               # N/8
        s3 = self.layer3(s2)               # N/16
        s4 = self.layer4(s3)               # N/32
        d = self.up4(s4, s3)
        d = self.up3(d, s2)
        d = self.up2(d, s1)
        d = self.up1(d, s0)
        d = self.up0(d)
        out = {}
        for h, layer in self.head_layers.items():
            z = layer(d).squeeze(1)        # (batch, N, N)
            out[h] = z if logits else torch.sigmoid(z)
        return out


def build_model(cfg: ModelConfig) -> STUNet:
    return STUNet(cfg)
