"""Learned correction factor: res = mse(x0, x_zi) - mse(x_a, x_zi).

The true map is unknown at election time, but the gap between a
candidate's distance to it and the candidate's distance to the rough map
turns out to be predictable from the pair (x_a, x_zi) alone.  A small
residual CNN regresses that gap from five channels: the two maps, their
LoG edge fields, and the candidate's high-power mask.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from .boost import load_split
from .checkpoint import load_checkpoint, save_checkpoint
from .election import log_filter
from .errors import ParameterError, TrainingError, TrainingWarning
from .escache import enrich_samples
from .grids import Condition
from .metrics import mse
from .sampler import generate_candidates
from .synth import place_sensors

__all__ = [
    "CorrectorConfig",
    "CorrectorTrainConfig",
    "CorrectorModel",
    "corrector_input",
    "build_corpus",
    "train_corrector",
]


@dataclass(frozen=True)
class CorrectorConfig:
    """Residual trunk: stem + 2 convs per block + fuse conv, then a
    two-layer regression head.  blocks=16 gives the 34-layer full
    profile, blocks=4 the 10-layer desk profile."""

    width: int = 32
    blocks: int = 4
    groups: int = 8
    log_sigma: float = 1.0
    high_power_quantile: float = 0.9

    def __post_init__(self):
        if self.width % self.groups:
            raise ParameterError("width must be divisible by the group count")
        if self.blocks < 1:
            raise ParameterError("need at least one residual block")

    @classmethod
    def full(cls):
        return cls(width=64, blocks=16)


@dataclass(frozen=True)
class CorrectorTrainConfig:
    steps: int = 3000
    batch_size: int = 16
    lr: float = 1e-3
    holdout: float = 0.1
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if not 0.0 <= self.holdout < 1.0:
            raise ParameterError(f"holdout fraction {self.holdout} outside [0, 1)")


def corrector_input(x_a, x_z, log_sigma=1.0, quantile=0.9):
    """(5, H, W) channel stack for one (rough, candidate) pair."""
    a = x_a.values if hasattr(x_a, "values") else np.asarray(x_a, float)
    z = x_z.values if hasattr(x_z, "values") else np.asarray(x_z, float)
    if a.shape != z.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {z.shape}")
    thresh = np.quantile(z, quantile)
    mask = (z >= thresh).astype(np.float64)
    return np.stack([a, z, log_filter(a, log_sigma), log_filter(z, log_sigma), mask])


class _ResBlock(nn.Module):
    def __init__(self, width, groups):
        super().__init__()
        self.norm1 = nn.GroupNorm(groups, width)
        self.conv1 = nn.Conv2d(width, width, 3, padding=1)
        self.norm2 = nn.GroupNorm(groups, width)
        self.conv2 = nn.Conv2d(width, width, 3, padding=1)
        self.act = nn.SiLU()

    def forward(self, x):
        h = self.conv1(self.act(self.norm1(x)))
        h = self.conv2(self.act(self.norm2(h)))
        return x + h


class _CorrectorNet(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        w = cfg.width
        self.stem = nn.Conv2d(5, w, 3, padding=1)
        self.blocks = nn.Sequential(*[_ResBlock(w, cfg.groups)
                                      for _ in range(cfg.blocks)])
        self.fuse = nn.Sequential(nn.GroupNorm(cfg.groups, w), nn.SiLU(),
                                  nn.Conv2d(w, w, 3, padding=1))
        self.head = nn.Sequential(nn.Linear(w, w), nn.SiLU(), nn.Linear(w, 1))

    def forward(self, x):
        h = self.fuse(self.blocks(self.stem(x)))
        pooled = h.mean(dim=(2, 3))
        return self.head(pooled)[:, 0]


class CorrectorModel:
    kind = "corrector"

    def __init__(self, net, cfg, meta=None):
        self.net = net
        self.cfg = cfg
        self.meta = dict(meta or {})

    def predict(self, x_a, x_z):
        """Estimated res for one (rough, candidate) pair."""
        inp = corrector_input(x_a, x_z, self.cfg.log_sigma,
                              self.cfg.high_power_quantile)
        self.net.eval()
        with torch.no_grad():
            out = self.net(torch.from_numpy(inp).float().unsqueeze(0))
        return float(out.item())

    def state_arrays(self):
        return {k: v.detach().cpu().numpy() for k, v in self.net.state_dict().items()}

    def save(self, path):
        meta = dict(self.meta)
        meta["kind"] = self.kind
        meta["config"] = asdict(self.cfg)
        save_checkpoint(path, meta, self.state_arrays())

    @classmethod
    def load(cls, path):
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != cls.kind:
            raise ParameterError(
                f"checkpoint kind {meta.get('kind')!r}, expected {cls.kind!r}"
            )
        cfg = CorrectorConfig(**meta["config"])
        net = _CorrectorNet(cfg)
        net.load_state_dict({k: torch.from_numpy(v) for k, v in arrays.items()})
        net.eval()
        return cls(net, cfg, meta)


def build_corpus(out, manifest, boost, denoiser, n_maps=120, m=8, k_range=(4, 32),
                 u=10, seed=0, log=None):
    """Run boost + generation over training maps and record (x_a, x_zi, res*)."""
    pairs = load_split(manifest, "train")
    if not pairs:
        raise TrainingError("train split is empty")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))[:n_maps]
    lo, hi = k_range
    xa_stack, xz_stack, group, targets, ks = [], [], [], [], []
    for gi, idx in enumerate(order):
        truth, layout = pairs[idx]
        k = int(rng.integers(lo, hi + 1))
        samples = place_sensors(truth, layout, k, rng)
        x_a, es = enrich_samples(boost, samples, layout, rng)
        cands = generate_candidates(denoiser, Condition(layout, es), m, u,
                                    eta=0.0, seed=int(rng.integers(2 ** 31)))
        base = mse(x_a, truth)
        xa_stack.append(x_a.values.astype(np.float32))
        ks.append(k)
        for cand in cands:
            xz_stack.append(cand.values.astype(np.float32))
            group.append(gi)
            targets.append(mse(truth, cand) - mse(x_a, cand))
        if log and (gi + 1) % 20 == 0:
            log(f"corpus: {gi + 1}/{len(order)} maps (boost mse {base:.5f})")
    np.savez_compressed(
        out,
        xa=np.stack(xa_stack),
        xz=np.stack(xz_stack),
        group=np.asarray(group, dtype=np.int64),
        target=np.asarray(targets, dtype=np.float64),
        k=np.asarray(ks, dtype=np.int64),
    )


def train_corrector(corpus, train_cfg=None, cfg=None, log=None):
    """Fit the regressor; holdout diagnostics are stored in the metadata."""
    train_cfg = train_cfg or CorrectorTrainConfig()
    cfg = cfg or CorrectorConfig()
    if isinstance(corpus, str):
        with np.load(corpus) as doc:
            corpus = {key: doc[key] for key in doc.files}
    xa = corpus["xa"].astype(np.float64)
    xz = corpus["xz"].astype(np.float64)
    group = corpus["group"]
    target = corpus["target"].astype(np.float64)
    n = len(xz)
    if n < 2:
        raise TrainingError("corpus too small to train on")
    if np.allclose(target, target[0]):
        warnings.warn("degenerate corpus: all correction targets identical",
                      TrainingWarning)
    inputs = np.stack([
        corrector_input(xa[g], xz[i], cfg.log_sigma, cfg.high_power_quantile)
        for i, g in enumerate(group)
    ]).astype(np.float32)
    rng = np.random.default_rng(train_cfg.seed)
    # Hold out whole groups so candidates of one map never straddle the split.
    groups = np.unique(group)
    shuffled = rng.permutation(groups)
    n_hold = max(1, int(len(groups) * train_cfg.holdout)) if train_cfg.holdout else 0
    hold_groups = set(shuffled[:n_hold].tolist())
    hold_mask = np.array([g in hold_groups for g in group])
    train_idx = np.flatnonzero(~hold_mask)
    hold_idx = np.flatnonzero(hold_mask)
    torch.manual_seed(train_cfg.seed)
    net = _CorrectorNet(cfg)
    net.train()
    opt = torch.optim.Adam(net.parameters(), lr=train_cfg.lr)
    # Targets are tiny in absolute terms; scale up for a better-conditioned
    # regression and fold the scale back into the stored head weights.
    scale = float(np.std(target[train_idx])) or 1.0
    history = []
    for step in range(train_cfg.steps):
        pick = rng.choice(train_idx, size=min(train_cfg.batch_size, len(train_idx)),
                          replace=False)
        x = torch.from_numpy(inputs[pick])
        y = torch.from_numpy((target[pick] / scale).astype(np.float32))
        opt.zero_grad()
        loss = ((net(x) - y) ** 2).mean()
        if not torch.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}")
        loss.backward()
        opt.step()
        history.append(float(loss.item()))
        if log and (step % train_cfg.log_every == 0 or step == train_cfg.steps - 1):
            log(f"step {step} loss {history[-1]:.6f}")
    with torch.no_grad():
        head = net.head[-1]
        head.weight.mul_(scale)
        head.bias.mul_(scale)
    net.eval()
    meta = {
        "train": asdict(train_cfg),
        "target_scale": scale,
        "steps_run": len(history),
        "final_loss": history[-1],
    }
    model = CorrectorModel(net, cfg, meta)
    if len(hold_idx):
        # model.meta is a copy; update it, not the local dict
        model.meta.update(_holdout_stats(model, inputs, target, group, hold_idx))
        if log:
            log(f"holdout: {model.meta['holdout']}")
    return model


def _holdout_stats(model, inputs, target, group, hold_idx):
    """Held-out squared error vs the constant predictor, plus pairwise
    ranking accuracy of the corrected distance base + res against the
    true distance base + res*, within each group."""
    net = model.net
    with torch.no_grad():
        preds = net(torch.from_numpy(inputs[hold_idx])).numpy().astype(np.float64)
    truth = target[hold_idx]
    # Channel 0 is x_a, channel 1 is x_zi; their MSE is the shared base term.
    pair = inputs[hold_idx].astype(np.float64)
    base = np.mean((pair[:, 0] - pair[:, 1]) ** 2, axis=(1, 2))
    corrected = base + preds
    true_dist = base + truth
    const = float(np.mean(np.delete(target, hold_idx)))
    model_se = float(np.mean((preds - truth) ** 2))
    const_se = float(np.mean((const - truth) ** 2))
    correct = 0
    total = 0
    for g in np.unique(group[hold_idx]):
        sel = np.flatnonzero(group[hold_idx] == g)
        for i in range(len(sel)):
            for j in range(i + 1, len(sel)):
                a, b = sel[i], sel[j]
                if true_dist[a] == true_dist[b]:
                    continue
                total += 1
                if (corrected[a] < corrected[b]) == (true_dist[a] < true_dist[b]):
                    correct += 1
    return {
        "holdout": {
            "n": int(len(hold_idx)),
            "model_se": model_se,
            "constant_se": const_se,
            "pairwise_accuracy": correct / total if total else None,
        }
    }
