"""Block 2 training: the conditional noise-prediction network.

Same trunk as the boost network but time-conditioned; inputs are the
noised map, the occupancy grid and the dense enriched-sample view.  The
objective is plain epsilon-prediction MSE under uniformly drawn steps.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch

from .attunet import AttUnet, AttUnetConfig
from .boost import load_split
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ParameterError, ShapeError, TrainingError
from .escache import load_es_cache
from .schedule import make_schedule

__all__ = ["DenoiserTrainConfig", "DenoiserModel", "train_denoiser"]


@dataclass(frozen=True)
class DenoiserTrainConfig:
    steps: int = 16000
    batch_size: int = 8
    lr: float = 1e-4
    seed: int = 0
    log_every: int = 100
    target_loss: float = None

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ParameterError("steps and batch size must be positive")


class DenoiserModel:
    """Trained noise predictor bundled with its schedule parameters."""

    kind = "denoiser"

    def __init__(self, net, cfg, sched_params, meta=None):
        self.net = net
        self.cfg = cfg
        self.sched_params = dict(sched_params)
        self.meta = dict(meta or {})

    @property
    def resolution(self):
        return self.cfg.resolution

    def schedule(self):
        return make_schedule(**self.sched_params)

    def eps_fn(self):
        """(x, t, cond) -> estimated noise; accepts (H, W) or (N, H, W)."""
        net = self.net
        net.eval()

        def eps(x, t, cond):
            x = np.asarray(x, dtype=np.float64)
            squeeze = x.ndim == 2
            batch = x[None] if squeeze else x
            cond_ch = cond.channels()
            if cond_ch.shape[1:] != batch.shape[1:]:
                raise ShapeError(
                    f"condition {cond_ch.shape[1:]} vs state {batch.shape[1:]}"
                )
            stacked = np.concatenate(
                [batch[:, None], np.broadcast_to(cond_ch, (len(batch),) + cond_ch.shape)],
                axis=1,
            )
            with torch.no_grad():
                inp = torch.from_numpy(np.ascontiguousarray(stacked)).float()
                ts = torch.full((len(batch),), int(t), dtype=torch.long)
                out = net(inp, ts)[:, 0].numpy().astype(np.float64)
            return out[0] if squeeze else out

        return eps

    def state_arrays(self):
        return {k: v.detach().cpu().numpy() for k, v in self.net.state_dict().items()}

    def save(self, path):
        meta = dict(self.meta)
        meta["kind"] = self.kind
        meta["config"] = asdict(self.cfg)
        meta["config_hash"] = self.cfg.config_hash()
        meta["schedule"] = self.sched_params
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
        return cls(net, cfg, meta["schedule"], meta)


def train_denoiser(manifest, sched, cfg, train_cfg, es_cache=None, log=None):
    """Train the conditional denoiser against cached enriched samples."""
    if not cfg.time_embed:
        raise ParameterError("denoiser network must enable the time embedding")
    pairs = load_split(manifest, "train")
    if not pairs:
        raise TrainingError("train split is empty")
    res = cfg.resolution
    if pairs[0][0].shape != (res, res):
        raise ShapeError(
            f"map shape {pairs[0][0].shape} does not match model resolution {res}"
        )
    if es_cache is None:
        raise ParameterError("training requires a precomputed enriched-sample cache")
    cache = load_es_cache(es_cache) if isinstance(es_cache, str) else es_cache
    es_all = cache["es"]
    owner = cache["map_index"]
    if owner.max() >= len(pairs):
        raise ParameterError("enriched-sample cache does not match the train split")
    truths = np.stack([t.values for t, _ in pairs])
    occs = np.stack([l.occupancy.astype(np.float64) for _, l in pairs])
    x0_all = 2.0 * truths - 1.0
    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng(train_cfg.seed)
    net = AttUnet(cfg)
    net.train()
    opt = torch.optim.Adam(net.parameters(), lr=train_cfg.lr)
    T = sched.T
    history = []
    smoothed = None
    for step in range(train_cfg.steps):
        pick = rng.integers(0, len(es_all), size=train_cfg.batch_size)
        t_batch = rng.integers(1, T + 1, size=train_cfg.batch_size)
        maps = owner[pick]
        x0 = x0_all[maps]
        eps = rng.standard_normal(x0.shape)
        ab = sched.alpha_cum[t_batch][:, None, None]
        x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
        inputs = np.stack([x_t, occs[maps], es_all[pick]], axis=1)
        x = torch.from_numpy(inputs).float()
        ts = torch.from_numpy(t_batch).long()
        target = torch.from_numpy(eps).float().unsqueeze(1)
        opt.zero_grad()
        loss = ((net(x, ts) - target) ** 2).mean()
        if not torch.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}")
        loss.backward()
        opt.step()
        value = float(loss.item())
        history.append(value)
        smoothed = value if smoothed is None else 0.99 * smoothed + 0.01 * value
        if log and (step % train_cfg.log_every == 0 or step == train_cfg.steps - 1):
            log(f"step {step} loss {value:.6f} smoothed {smoothed:.6f}")
        if train_cfg.target_loss is not None and smoothed < train_cfg.target_loss:
            if log:
                log(f"stopping at step {step}: smoothed {smoothed:.6f}")
            break
    net.eval()
    meta = {
        "train": asdict(train_cfg),
        "dataset_hash": cache.get("dataset_hash"),
        "steps_run": len(history),
        "final_loss": history[-1],
        "loss_history": [round(v, 8) for v in history],
    }
    return DenoiserModel(net, cfg, sched.params(), meta)
