"""U-Net with self-attention at the coarse stages.

The layer list is symmetric: the first half downsamples (after the stem
layer), the second half mirrors it back up with skip connections paired
by resolution.  Attention layers are flagged by 1-based layer index; the
reference profile places them on the two deepest encoder layers and the
bottom decoder layer.  An optional sinusoidal time embedding turns the
same trunk into the diffusion denoiser.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import torch
from torch import nn

from .errors import ParameterError

__all__ = ["AttUnetConfig", "AttUnet", "timestep_embedding"]


@dataclass(frozen=True)
class AttUnetConfig:
    in_channels: int = 3
    out_channels: int = 1
    resolution: int = 256
    channels: tuple = (128, 128, 256, 256, 512, 512, 512, 512, 256, 256, 128, 128)
    attention_layers: tuple = (5, 6, 7)
    groups: int = 8
    time_embed: bool = False

    def __post_init__(self):
        n = len(self.channels)
        if n < 2 or n % 2:
            raise ParameterError("channel schedule must have even positive length")
        half = n // 2
        if tuple(self.channels[:half]) != tuple(reversed(self.channels[half:])):
            raise ParameterError("decoder channel schedule must mirror the encoder")
        if any(not 1 <= i <= n for i in self.attention_layers):
            raise ParameterError("attention layer index outside the schedule")
        if any(c % self.groups for c in self.channels):
            raise ParameterError("channel widths must be divisible by the group count")
        if self.resolution % (1 << (half - 1)):
            raise ParameterError(
                f"resolution {self.resolution} not divisible by 2^{half - 1}"
            )

    @property
    def depth(self):
        """Number of resolution levels (stem plus downsamples)."""
        return len(self.channels) // 2

    def layer_resolutions(self):
        """Per-layer spatial resolution, mirroring the channel schedule."""
        half = self.depth
        enc = [self.resolution >> i for i in range(half)]
        return tuple(enc + enc[::-1])

    @classmethod
    def desk(cls, in_channels=3, time_embed=False):
        """Scaled-down profile for 64 x 64 maps, base width 32."""
        return cls(
            in_channels=in_channels,
            resolution=64,
            channels=(32, 64, 64, 128, 128, 64, 64, 32),
            attention_layers=(3, 4, 5),
            time_embed=time_embed,
        )

    def config_hash(self):
        doc = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()[:16]


def timestep_embedding(t, dim, max_period=10000.0):
    """Sinusoidal embedding of integer timesteps, shape (len(t), dim)."""
    if dim % 2:
        raise ParameterError("embedding dimension must be even")
    half = dim // 2
    freqs = torch.exp(
        -math.log(max_period) * torch.arange(half, dtype=torch.float32) / half
    ).to(t.device)
    angles = t.float()[:, None] * freqs[None, :]
    return torch.cat([torch.cos(angles), torch.sin(angles)], dim=1)


class ResBlock(nn.Module):
    def __init__(self, in_ch, out_ch, groups, time_dim=None):
        super().__init__()
        self.norm1 = nn.GroupNorm(groups, in_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.norm2 = nn.GroupNorm(groups, out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.act = nn.SiLU()
        self.time_proj = nn.Linear(time_dim, out_ch) if time_dim else None
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x, temb=None):
        h = self.conv1(self.act(self.norm1(x)))
        if self.time_proj is not None and temb is not None:
            h = h + self.time_proj(temb)[:, :, None, None]
        h = self.conv2(self.act(self.norm2(h)))
        return h + self.skip(x)


class SelfAttention(nn.Module):
    """Single-head scaled dot-product attention over flattened positions."""

    def __init__(self, ch, groups):
        super().__init__()
        self.norm = nn.GroupNorm(groups, ch)
        self.qkv = nn.Conv2d(ch, 3 * ch, 1)
        self.proj = nn.Conv2d(ch, ch, 1)
        self.scale = ch ** -0.5

    def forward(self, x):
        b, c, h, w = x.shape
        q, k, v = self.qkv(self.norm(x)).chunk(3, dim=1)
        q = q.reshape(b, c, h * w).transpose(1, 2)
        k = k.reshape(b, c, h * w)
        v = v.reshape(b, c, h * w).transpose(1, 2)
        attn = torch.softmax(torch.bmm(q, k) * self.scale, dim=2)
        out = torch.bmm(attn, v).transpose(1, 2).reshape(b, c, h, w)
        return x + self.proj(out)


class _Layer(nn.Module):
    """One schedule entry: resize, concat an optional skip, ResBlock, attention.

    GroupNorm group counts must divide trunk_ch + skip_ch, which holds for
    mirrored schedules because both halves draw from the same width set.
    """

    def __init__(self, trunk_ch, skip_ch, out_ch, groups, time_dim, attention, resize):
        super().__init__()
        if resize == "down":
            self.resize = nn.Conv2d(trunk_ch, trunk_ch, 3, stride=2, padding=1)
        elif resize == "up":
            self.resize = nn.Sequential(
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(trunk_ch, trunk_ch, 3, padding=1),
            )
        else:
            self.resize = nn.Identity()
        self.block = ResBlock(trunk_ch + skip_ch, out_ch, groups, time_dim)
        self.attn = SelfAttention(out_ch, groups) if attention else None

    def forward(self, x, temb=None, skip=None):
        h = self.resize(x)
        if skip is not None:
            h = torch.cat([h, skip], dim=1)
        h = self.block(h, temb)
        if self.attn is not None:
            h = self.attn(h)
        return h


class AttUnet(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        ch = cfg.channels
        half = cfg.depth
        time_dim = 4 * ch[0] if cfg.time_embed else None
        self.time_dim = time_dim
        if cfg.time_embed:
            self.time_mlp = nn.Sequential(
                nn.Linear(ch[0], time_dim), nn.SiLU(), nn.Linear(time_dim, time_dim)
            )
        self.stem = nn.Conv2d(cfg.in_channels, ch[0], 3, padding=1)
        attn = set(cfg.attention_layers)
        self.encoder = nn.ModuleList()
        for i in range(half):
            trunk = ch[i - 1] if i else ch[0]
            self.encoder.append(_Layer(trunk, 0, ch[i], cfg.groups, time_dim,
                                       attention=(i + 1) in attn,
                                       resize="down" if i else "same"))
        self.decoder = nn.ModuleList()
        for j in range(half, 2 * half):
            # Bottom layer feeds straight through; the rest receive a skip
            # from the encoder layer at the matching resolution.
            skip_ch = 0 if j == half else ch[2 * half - 1 - j]
            self.decoder.append(_Layer(ch[j - 1], skip_ch, ch[j], cfg.groups,
                                       time_dim, attention=(j + 1) in attn,
                                       resize="same" if j == half else "up"))
        self.head = nn.Sequential(
            nn.GroupNorm(cfg.groups, ch[-1]),
            nn.SiLU(),
            nn.Conv2d(ch[-1], cfg.out_channels, 3, padding=1),
        )

    def forward(self, x, t=None):
        cfg = self.cfg
        if x.shape[1] != cfg.in_channels:
            raise ParameterError(
                f"expected {cfg.in_channels} input channels, got {x.shape[1]}"
            )
        if cfg.time_embed:
            if t is None:
                raise ParameterError("this network requires a timestep input")
            temb = self.time_mlp(timestep_embedding(t, cfg.channels[0]))
        else:
            temb = None
        h = self.stem(x)
        skips = []
        for layer in self.encoder:
            h = layer(h, temb)
            skips.append(h)
        for j, layer in enumerate(self.decoder):
            skip = None if j == 0 else skips[len(skips) - 1 - j]
            h = layer(h, temb, skip)
        return self.head(h)
