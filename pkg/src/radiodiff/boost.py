"""Block 1: rough-map predictor training and inference.

The network sees three channels per example: the dense sparse-sample
view, the building occupancy, and the binary sensor-location mask (so a
measured zero is distinguishable from an unmeasured cell).  Sensors are
re-drawn every step with a fresh k, which is what lets a single model
serve the whole sparsity range at inference time.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import asdict, dataclass

import numpy as np
import torch

from .attunet import AttUnet, AttUnetConfig
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ParameterError, ShapeError, TrainingError
from .grids import BuildingLayout, RadioMap, SampleSet
from .synth import place_sensors

__all__ = ["TrainConfig", "BoostModel", "train_attunet", "predict_rough",
           "manifest_hash", "load_split"]


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 3000
    batch_size: int = 8
    lr: float = 1e-4
    k_range: tuple = (4, 32)
    seed: int = 0
    log_every: int = 100
    # Stop early once the smoothed loss dips below this, if set.
    target_loss: float = None

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ParameterError("steps and batch size must be positive")
        lo, hi = self.k_range
        if not 0 <= lo <= hi:
            raise ParameterError(f"bad sensor count range {self.k_range}")


class BoostModel:
    """Trained rough-map predictor plus its provenance metadata."""

    kind = "boost"

    def __init__(self, net, cfg, meta=None):
        self.net = net
        self.cfg = cfg
        self.meta = dict(meta or {})

    @property
    def resolution(self):
        return self.cfg.resolution

    def state_arrays(self):
        return {k: v.detach().cpu().numpy() for k, v in self.net.state_dict().items()}

    def save(self, path):
        meta = dict(self.meta)
        meta["kind"] = self.kind
        meta["config"] = asdict(self.cfg)
        meta["config_hash"] = self.cfg.config_hash()
        save_checkpoint(path, meta, self.state_arrays())

    @classmethod
    def load(cls, path):
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != cls.kind:
            raise ParameterError(
                f"checkpoint kind {meta.get('kind')!r}, expected {cls.kind!r}"
            )
        cfg_doc = dict(meta["config"])
        for key in ("channels", "attention_layers"):
            cfg_doc[key] = tuple(cfg_doc[key])
        cfg = AttUnetConfig(**cfg_doc)
        net = AttUnet(cfg)
        net.load_state_dict({k: torch.from_numpy(v) for k, v in arrays.items()})
        net.eval()
        return cls(net, cfg, meta)


def manifest_hash(manifest):
    path = os.path.join(manifest.root, "manifest.json")
    if not os.path.exists(path):
        return None
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def load_split(manifest, split):
    """Materialize (RadioMap, BuildingLayout) pairs for a split."""
    pairs = []
    for entry in manifest.select(split):
        truth, layout, _ = manifest.load_entry(entry)
        pairs.append((truth, layout))
    return pairs


def batch_input(samples, layout):
    """Stack the three conditioning channels for one example."""
    return np.stack([samples.dense(),
                     layout.occupancy.astype(np.float64),
                     samples.mask()])


def train_attunet(manifest, cfg, train_cfg, log=None):
    pairs = load_split(manifest, "train")
    if not pairs:
        raise TrainingError("train split is empty")
    for truth, layout in pairs:
        if truth.shape != (cfg.resolution, cfg.resolution):
            raise ShapeError(
                f"map shape {truth.shape} does not match model resolution "
                f"{cfg.resolution}"
            )
    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng(train_cfg.seed)
    net = AttUnet(cfg)
    net.train()
    opt = torch.optim.Adam(net.parameters(), lr=train_cfg.lr)
    k_lo, k_hi = train_cfg.k_range
    history = []
    smoothed = None
    for step in range(train_cfg.steps):
        idx = rng.integers(0, len(pairs), size=train_cfg.batch_size)
        inputs, targets, free = [], [], []
        for i in idx:
            truth, layout = pairs[i]
            k = int(rng.integers(k_lo, k_hi + 1))
            samples = place_sensors(truth, layout, k, rng)
            inputs.append(batch_input(samples, layout))
            targets.append(truth.values)
            free.append(1.0 - layout.occupancy)
        x = torch.from_numpy(np.stack(inputs)).float()
        y = torch.from_numpy(np.stack(targets)).float().unsqueeze(1)
        w = torch.from_numpy(np.stack(free)).float().unsqueeze(1)
        opt.zero_grad()
        pred = net(x)
        loss = ((pred - y) ** 2 * w).sum() / w.sum()
        if not torch.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}")
        loss.backward()
        opt.step()
        value = float(loss.item())
        history.append(value)
        smoothed = value if smoothed is None else 0.98 * smoothed + 0.02 * value
        if log and (step % train_cfg.log_every == 0 or step == train_cfg.steps - 1):
            log(f"step {step} loss {value:.6f} smoothed {smoothed:.6f}")
        if train_cfg.target_loss is not None and smoothed < train_cfg.target_loss:
            if log:
                log(f"stopping at step {step}: smoothed {smoothed:.6f}")
            break
    net.eval()
    meta = {
        "train": {**asdict(train_cfg), "k_range": list(train_cfg.k_range)},
        "dataset_hash": manifest_hash(manifest),
        "steps_run": len(history),
        "final_loss": history[-1],
        "loss_history": [round(v, 8) for v in history],
    }
    return BoostModel(net, cfg, meta)


def predict_rough(model, samples, layout):
    """Rough map from sparse samples; clipped to [0, 1], buildings zeroed."""
    if not isinstance(samples, SampleSet) or not isinstance(layout, BuildingLayout):
        raise TypeError("predict_rough expects a SampleSet and a BuildingLayout")
    if samples.shape != layout.shape:
        raise ShapeError(f"sample grid {samples.shape} vs layout {layout.shape}")
    res = model.resolution
    if samples.shape != (res, res):
        raise ShapeError(f"grid {samples.shape} does not match model resolution {res}")
    x = torch.from_numpy(batch_input(samples, layout)).float().unsqueeze(0)
    model.net.eval()
    with torch.no_grad():
        pred = model.net(x)[0, 0].numpy().astype(np.float64)
    np.clip(pred, 0.0, 1.0, out=pred)
    pred[layout.occupancy == 1] = 0.0
    return RadioMap(pred)
