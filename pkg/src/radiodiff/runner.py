"""Experiment orchestration: estimator runs, dataset scoring, ablation.

A RunRecord is the single artifact type: per-map metric rows plus
aggregates plus provenance (config hash, checkpoint hashes).  Its
content hash covers everything except wall-clock timings, so reruns
with identical config and seeds hash identically.
"""

from __future__ import annotations

import csv
import glob
import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import load_manifest
from .errors import ConfigurationError
from .estimators import make_estimator
from .metrics import metric_report
from .rmap_io import load_map, save_map
from .synth import place_sensors

DEFAULT_KS = (10, 25, 50, 100, 150, 200)

__all__ = ["ExperimentConfig", "RunRecord", "run_pipeline", "evaluate_dataset",
           "ablate"]


def _canonical(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: str
    method: str
    out_dir: str
    split: str = "inference"
    ks: tuple = DEFAULT_KS
    seed: int = 0
    run_dir: str = None
    limit: int = None
    profile: str = "desk"
    save_estimates: bool = True
    estimator: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.ks or any(k <= 0 for k in self.ks):
            raise ConfigurationError(f"k values must be positive, got {self.ks}")

    def as_doc(self):
        doc = asdict(self)
        doc["ks"] = list(self.ks)
        return doc

    def config_hash(self):
        return hashlib.sha256(_canonical(self.as_doc()).encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    config: dict
    per_map: list
    aggregates: dict
    checkpoint_hashes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    incomplete: bool = False
    missing: list = field(default_factory=list)

    def _hashed_doc(self):
        per_map = [{k: v for k, v in row.items() if k != "timings"}
                   for row in self.per_map]
        return {
            "config": self.config,
            "per_map": per_map,
            "aggregates": self.aggregates,
            "checkpoint_hashes": self.checkpoint_hashes,
            "incomplete": self.incomplete,
            "missing": self.missing,
        }

    def content_hash(self):
        return hashlib.sha256(_canonical(self._hashed_doc()).encode()).hexdigest()

    def save(self, path):
        doc = self._hashed_doc()
        doc["content_hash"] = self.content_hash()
        doc["timings"] = self.timings
        doc["per_map_timings"] = [row.get("timings", {}) for row in self.per_map]
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)

    def save_csv(self, path):
        columns = ["map", "k", "mse", "rmse", "nmse", "psnr"]
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in self.per_map:
                writer.writerow([row.get(c) for c in columns])
        os.replace(tmp, path)


def _mean(rows, key):
    return float(np.mean([row[key] for row in rows]))


def _aggregate(per_map, ks=None):
    out = {}
    metrics = ("mse", "rmse", "nmse", "psnr")
    if per_map:
        out["overall"] = {m: _mean(per_map, m) for m in metrics}
        out["overall"]["n"] = len(per_map)
    if ks:
        for k in ks:
            rows = [row for row in per_map if row.get("k") == k]
            if rows:
                out[f"k={k}"] = {m: _mean(rows, m) for m in metrics}
                out[f"k={k}"]["n"] = len(rows)
    return out


def _file_hash(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()[:16]


def _checkpoint_hashes(cfg):
    out = {}
    if cfg.method == "wifidiffusion" and cfg.run_dir:
        for name in ("boost", "denoiser", "corrector"):
            path = os.path.join(cfg.run_dir, f"{name}.ckpt")
            if os.path.exists(path):
                out[name] = _file_hash(path)
    return out


def run_pipeline(cfg, log=None):
    """Run one estimator over a split for every configured k."""
    if not os.path.exists(cfg.manifest):
        raise ConfigurationError(f"manifest not found: {cfg.manifest}")
    manifest = load_manifest(cfg.manifest)
    entries = manifest.select(cfg.split)
    if cfg.limit is not None:
        entries = entries[:cfg.limit]
    if not entries:
        raise ConfigurationError(f"split {cfg.split!r} has no maps")
    estimator = make_estimator(cfg.method, run_dir=cfg.run_dir, **cfg.estimator)
    hashes = _checkpoint_hashes(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    est_dir = os.path.join(cfg.out_dir, "estimates")
    if cfg.save_estimates:
        os.makedirs(est_dir, exist_ok=True)
    per_map = []
    t_start = time.perf_counter()
    for idx, entry in enumerate(entries):
        truth, layout, _ = manifest.load_entry(entry)
        for k in cfg.ks:
            seeds = np.random.SeedSequence((cfg.seed, idx, k)).generate_state(2)
            sensor_seed, est_seed = int(seeds[0]), int(seeds[1])
            samples = place_sensors(truth, layout, k, sensor_seed)
            t0 = time.perf_counter()
            estimate, info = estimator(samples, layout, seed=est_seed)
            elapsed = time.perf_counter() - t0
            report = metric_report(truth, estimate)
            row = {
                "map": entry.map_path,
                "k": k,
                "sensor_seed": sensor_seed,
                "estimator_seed": est_seed,
                **report.as_dict(),
                "timings": {"total": elapsed, **info.get("timings", {})},
            }
            if cfg.save_estimates:
                stem = f"{cfg.split}_{idx:04d}_k{k}"
                est_path = os.path.join(est_dir, f"{stem}.rmap")
                save_map(est_path, estimate)
                row["estimate"] = os.path.relpath(est_path, cfg.out_dir)
                if "breakdown" in info:
                    bd_path = os.path.join(est_dir, f"{stem}_scores.json")
                    with open(bd_path, "w") as fh:
                        json.dump(info["breakdown"], fh, indent=1)
                    row["scores"] = os.path.relpath(bd_path, cfg.out_dir)
            per_map.append(row)
            if log:
                log(f"{cfg.method} {entry.map_path} k={k} mse={report.mse:.6f}")
    record = RunRecord(
        config=cfg.as_doc(),
        per_map=per_map,
        aggregates=_aggregate(per_map, cfg.ks),
        checkpoint_hashes=hashes,
        timings={"wall": time.perf_counter() - t_start},
    )
    record.save(os.path.join(cfg.out_dir, "record.json"))
    record.save_csv(os.path.join(cfg.out_dir, "per_map.csv"))
    return record


def evaluate_dataset(pred_dir, truth_dir, out_dir=None):
    """Score prediction files against same-named truth files."""
    truth_files = sorted(
        os.path.basename(p) for p in glob.glob(os.path.join(truth_dir, "*.rmap"))
    )
    if not truth_files:
        raise ConfigurationError(f"no .rmap truth files under {truth_dir}")
    per_map = []
    missing = []
    for name in truth_files:
        pred_path = os.path.join(pred_dir, name)
        if not os.path.exists(pred_path):
            missing.append(name)
            continue
        truth = load_map(os.path.join(truth_dir, name))
        pred = load_map(pred_path)
        report = metric_report(truth, pred)
        per_map.append({"map": name, "k": None, **report.as_dict()})
    record = RunRecord(
        config={"pred_dir": pred_dir, "truth_dir": truth_dir},
        per_map=per_map,
        aggregates=_aggregate(per_map),
        incomplete=bool(missing),
        missing=missing,
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        record.save(os.path.join(out_dir, "record.json"))
        record.save_csv(os.path.join(out_dir, "per_map.csv"))
    return record


ABLATION_ARMS = (
    ("boost_on_election_on", True, True),
    ("boost_on_election_off", True, False),
    ("boost_off_election_on", False, True),
    ("boost_off_election_off", False, False),
)


def ablate(manifest_path, out_dir, split="test", k=8, seed=0, run_dir=None,
           n_maps=None, estimator=None, log=None):
    """Run the four boost/election on-off combinations and tabulate."""
    records = {}
    for name, boost_on, election_on in ABLATION_ARMS:
        arm_estimator = dict(estimator or {})
        arm_estimator.update({"boost_on": boost_on, "election_on": election_on})
        cfg = ExperimentConfig(
            manifest=manifest_path,
            method="wifidiffusion",
            out_dir=os.path.join(out_dir, name),
            split=split,
            ks=(k,),
            seed=seed,
            run_dir=run_dir,
            limit=n_maps,
            estimator=arm_estimator,
        )
        if log:
            log(f"ablate: arm {name}")
        records[name] = run_pipeline(cfg, log=log)
    table = [
        {
            "arm": name,
            "boost_on": boost_on,
            "election_on": election_on,
            **records[name].aggregates["overall"],
        }
        for name, boost_on, election_on in ABLATION_ARMS
    ]
    os.makedirs(out_dir, exist_ok=True)
    doc = {"k": k, "split": split, "table": table}
    with open(os.path.join(out_dir, "ablation.json"), "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    with open(os.path.join(out_dir, "ablation.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm", "boost_on", "election_on", "mse", "rmse",
                         "nmse", "psnr", "n"])
        for row in table:
            writer.writerow([row["arm"], row["boost_on"], row["election_on"],
                             row["mse"], row["rmse"], row["nmse"], row["psnr"],
                             row["n"]])
    return records
