#!/usr/bin/env python3
"""Staged driver for the desk-scale experiment tree under runs/desk.

Each stage is resumable and idempotent: it skips itself when its output
artifact already exists (pass --force to redo).  Stages:

  data       generate the 600/50/50 map dataset
  boost      train the rough-map predictor
  escache    precompute enriched sample sets for the train split
  denoiser   train the conditional diffusion model
  corrector  build the residual-corrector corpus and train it
  eval       run all estimators on the test split at k=8
  ablate     2x2 ablation over {boost on/off} x {election on/off}

Run `python3 scripts/desk_run.py all` for the full chain.
"""

import argparse
import os
import sys
import time

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

RUN = os.path.join(ROOT, "runs", "desk")
DATA = os.path.join(RUN, "data")
SEED = 20260823
K_EVAL = 8


def log(msg):
    print(f"[{time.strftime('%H:%M:%S')}] {msg}", flush=True)


def stage_data(force):
    from radiodiff.dataset import build_dataset
    from radiodiff.synth import SynthParams
    manifest_path = os.path.join(DATA, "manifest.json")
    if os.path.exists(manifest_path) and not force:
        log("data: manifest exists, skipping")
        return
    log("data: generating 600/50/50 maps")
    build_dataset(DATA, SynthParams(seed=SEED), (600, 50, 50), seed=SEED)
    log("data: done")


def stage_boost(force):
    from radiodiff.attunet import AttUnetConfig
    from radiodiff.boost import TrainConfig, train_attunet
    from radiodiff.dataset import load_manifest
    out = os.path.join(RUN, "boost.ckpt")
    if os.path.exists(out) and not force:
        log("boost: checkpoint exists, skipping")
        return
    manifest = load_manifest(os.path.join(DATA, "manifest.json"))
    cfg = AttUnetConfig.desk()
    tc = TrainConfig(steps=3000, batch_size=8, lr=1e-4, k_range=(4, 32),
                     seed=SEED, log_every=50)
    log(f"boost: training {tc.steps} steps")
    model = train_attunet(manifest, cfg, tc, log=log)
    model.save(out)
    log(f"boost: saved {out} (final loss {model.meta['final_loss']:.6f})")


def stage_escache(force):
    from radiodiff.escache import build_es_cache
    from radiodiff.boost import BoostModel
    from radiodiff.dataset import load_manifest
    out = os.path.join(RUN, "escache.npz")
    if os.path.exists(out) and not force:
        log("escache: exists, skipping")
        return
    manifest = load_manifest(os.path.join(DATA, "manifest.json"))
    model = BoostModel.load(os.path.join(RUN, "boost.ckpt"))
    log("escache: building enriched-sample cache for the train split")
    build_es_cache(out, manifest, model, k_range=(4, 32), seed=SEED, log=log)
    log("escache: done")


def stage_denoiser(force):
    from radiodiff.attunet import AttUnetConfig
    from radiodiff.denoiser import DenoiserTrainConfig, train_denoiser
    from radiodiff.dataset import load_manifest
    from radiodiff.schedule import make_schedule
    out = os.path.join(RUN, "denoiser.ckpt")
    if os.path.exists(out) and not force:
        log("denoiser: checkpoint exists, skipping")
        return
    manifest = load_manifest(os.path.join(DATA, "manifest.json"))
    sched = make_schedule()
    cfg = AttUnetConfig.desk(time_embed=True)
    tc = DenoiserTrainConfig(steps=16000, batch_size=8, lr=1e-4, seed=SEED,
                             log_every=100)
    log(f"denoiser: training {tc.steps} steps")
    model = train_denoiser(manifest, sched, cfg, tc,
                           es_cache=os.path.join(RUN, "escache.npz"), log=log)
    model.save(out)
    log(f"denoiser: saved {out} (final loss {model.meta['final_loss']:.6f})")


def stage_corrector(force):
    from radiodiff.boost import BoostModel
    from radiodiff.corrector import CorrectorTrainConfig, build_corpus, train_corrector
    from radiodiff.dataset import load_manifest
    from radiodiff.denoiser import DenoiserModel
    corpus = os.path.join(RUN, "corrector_corpus.npz")
    out = os.path.join(RUN, "corrector.ckpt")
    if os.path.exists(out) and not force:
        log("corrector: checkpoint exists, skipping")
        return
    manifest = load_manifest(os.path.join(DATA, "manifest.json"))
    boost = BoostModel.load(os.path.join(RUN, "boost.ckpt"))
    denoiser = DenoiserModel.load(os.path.join(RUN, "denoiser.ckpt"))
    if not os.path.exists(corpus) or force:
        log("corrector: building corpus")
        build_corpus(corpus, manifest, boost, denoiser, n_maps=120, m=8,
                     k_range=(4, 32), seed=SEED, log=log)
    log("corrector: training")
    model = train_corrector(corpus, CorrectorTrainConfig(seed=SEED), log=log)
    model.save(out)
    log("corrector: done")


def stage_eval(force):
    import json
    from radiodiff.runner import ExperimentConfig, run_pipeline
    out = os.path.join(RUN, "eval")
    marker = os.path.join(out, "summary.json")
    if os.path.exists(marker) and not force:
        log("eval: summary exists, skipping")
        return
    log(f"eval: all estimators on the test split at k={K_EVAL}")
    summary = {"k": K_EVAL, "seed": SEED, "methods": {}}
    for method in ("rbf", "spline", "kriging", "wifidiffusion"):
        cfg = ExperimentConfig(
            manifest=os.path.join(DATA, "manifest.json"),
            method=method,
            out_dir=os.path.join(out, method),
            split="test",
            ks=(K_EVAL,),
            seed=SEED,
            run_dir=RUN if method == "wifidiffusion" else None,
        )
        log(f"eval: running {method}")
        record = run_pipeline(cfg, log=log)
        summary["methods"][method] = record.aggregates["overall"]
        log(f"eval: {method} mse {record.aggregates['overall']['mse']:.6f}")
    with open(marker, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    log("eval: done")


def stage_ablate(force):
    from radiodiff.runner import ablate
    out = os.path.join(RUN, "ablation")
    marker = os.path.join(out, "ablation.json")
    if os.path.exists(marker) and not force:
        log("ablate: record exists, skipping")
        return
    log("ablate: 2x2 over boost/election")
    ablate(
        manifest_path=os.path.join(DATA, "manifest.json"),
        out_dir=out,
        split="test",
        k=K_EVAL,
        seed=SEED,
        run_dir=RUN,
        n_maps=24,
        log=log,
    )
    log("ablate: done")


STAGES = {
    "data": stage_data,
    "boost": stage_boost,
    "escache": stage_escache,
    "denoiser": stage_denoiser,
    "corrector": stage_corrector,
    "eval": stage_eval,
    "ablate": stage_ablate,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("stages", nargs="+",
                    help="stage names in order, or 'all'")
    ap.add_argument("--force", action="store_true", help="redo even if outputs exist")
    args = ap.parse_args()
    names = list(STAGES) if args.stages == ["all"] else args.stages
    for name in names:
        if name not in STAGES:
            ap.error(f"unknown stage {name!r} (choose from {', '.join(STAGES)})")
        STAGES[name](args.force)


if __name__ == "__main__":
    main()
