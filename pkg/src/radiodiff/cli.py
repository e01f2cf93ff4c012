"""Command-line front end.

Subcommands mirror the library blocks:

  synth      generate a synthetic dataset with a manifest
  sample     draw k sensor readings from a stored map
  train      fit the boost / diffusion / corrector models
  estimate   reconstruct one map from a sample file
  eval       run an estimator over a split, or score pred vs truth dirs
  ablate     2x2 boost/election ablation
  plot       render a map to PNG

Every subcommand accepts --config (JSON file, default from the
RADIODIFF_CONFIG environment variable) and repeated --set key=value
overrides; explicit flags win over config values.  Exit codes: 0 on
success, 2 for configuration problems, 3 for numerical failures,
1 otherwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

from .config import ENV_VAR, apply_overrides, load_config
from .errors import ConfigurationError, NumericalError, RadiodiffError

__all__ = ["main", "build_parser"]


def _log(msg):
    print(f"[{time.strftime('%H:%M:%S')}] {msg}", flush=True)


def _cfg_from(args):
    return apply_overrides(load_config(args.config), args.set)


def _pick(flag_value, cfg, key, default):
    if flag_value is not None:
        return flag_value
    return cfg.get(key, default)


def _section(cfg, prefix):
    """Sub-dict of a flat config under `prefix.`, prefix stripped."""
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in cfg.items() if k.startswith(f"{prefix}.")}


def _require_path(path, what):
    if not path:
        raise ConfigurationError(f"missing required {what}")
    if not os.path.exists(path):
        raise ConfigurationError(f"{what} not found: {path}")
    return path


def _load_layout(path):
    from .grids import BuildingLayout
    from .rmap_io import load_map

    obj = load_map(_require_path(path, "layout file"))
    if not isinstance(obj, BuildingLayout):
        raise ConfigurationError(f"{path} is not an occupancy (u8) map")
    return obj


def _load_truth(path):
    from .grids import RadioMap
    from .rmap_io import load_map

    obj = load_map(_require_path(path, "map file"))
    if not isinstance(obj, RadioMap):
        raise ConfigurationError(f"{path} is not a float32 radio map")
    return obj


def _estimator_kwargs(cfg):
    """make_estimator kwargs from the estimator.* / election.* keys."""
    kwargs = _section(cfg, "estimator")
    election = _section(cfg, "election")
    if election:
        kwargs["election"] = election
    return kwargs


# ---------------------------------------------------------------- synth

def cmd_synth(args):
    from .dataset import build_dataset
    from .synth import SynthParams

    cfg = _cfg_from(args)
    fields = {f.name for f in dataclasses.fields(SynthParams)}
    kwargs = {}
    for name, value in _section(cfg, "synth").items():
        if name not in fields:
            raise ConfigurationError(f"unknown synth parameter {name!r}")
        kwargs[name] = tuple(value) if isinstance(value, list) else value
    if args.height is not None:
        kwargs["height"] = args.height
    if args.width is not None:
        kwargs["width"] = args.width
    kwargs["seed"] = args.seed
    params = SynthParams(**kwargs)
    counts = (args.train, args.test, args.inference)
    manifest = build_dataset(args.out, params, counts, seed=args.seed)
    total = sum(counts)
    print(f"wrote {total} maps under {args.out} "
          f"({params.height}x{params.width}, splits {counts})")
    return manifest


# --------------------------------------------------------------- sample

def cmd_sample(args):
    from .rmap_io import save_samples
    from .synth import place_sensors

    truth = _load_truth(args.map)
    layout = _load_layout(args.layout)
    samples = place_sensors(truth, layout, args.k, args.seed)
    save_samples(args.out, samples)
    print(f"wrote {samples.k} samples to {args.out}")


# ---------------------------------------------------------------- train

def _unet_config(profile, time_embed):
    from .attunet import AttUnetConfig

    if profile == "desk":
        return AttUnetConfig.desk(time_embed=time_embed)
    return AttUnetConfig(time_embed=time_embed)


def cmd_train_boost(args):
    from .boost import TrainConfig, train_attunet
    from .dataset import load_manifest

    cfg = _cfg_from(args)
    sect = _section(cfg, "boost")
    manifest = load_manifest(_require_path(args.manifest, "manifest"))
    tc = TrainConfig(
        steps=_pick(args.steps, sect, "steps", 3000),
        batch_size=_pick(args.batch_size, sect, "batch_size", 8),
        lr=_pick(args.lr, sect, "lr", 1e-4),
        k_range=tuple(sect.get("k_range", (4, 32))),
        seed=args.seed,
        target_loss=_pick(args.target_loss, sect, "target_loss", None),
    )
    model = train_attunet(manifest, _unet_config(args.profile, False), tc,
                          log=_log)
    model.save(args.out)
    print(f"saved boost checkpoint {args.out} "
          f"(final loss {model.meta['final_loss']:.6f})")


def cmd_train_diffusion(args):
    from .dataset import load_manifest
    from .denoiser import DenoiserTrainConfig, train_denoiser
    from .schedule import make_schedule

    cfg = _cfg_from(args)
    sect = _section(cfg, "diffusion")
    manifest = load_manifest(_require_path(args.manifest, "manifest"))
    sched = make_schedule(
        T=int(sect.get("T", 1000)),
        beta_1=sect.get("beta_1", 1e-4),
        beta_T=sect.get("beta_T", 0.02),
    )
    es_cache = args.es_cache
    if not os.path.exists(es_cache):
        if not args.boost:
            raise ConfigurationError(
                f"es cache {es_cache} missing; pass --boost CKPT to build it")
        from .boost import BoostModel
        from .escache import build_es_cache
        _log(f"building es cache {es_cache}")
        build_es_cache(es_cache, manifest,
                       BoostModel.load(_require_path(args.boost, "boost checkpoint")),
                       k_range=tuple(sect.get("k_range", (4, 32))),
                       seed=args.seed, log=_log)
    tc = DenoiserTrainConfig(
        steps=_pick(args.steps, sect, "steps", 16000),
        batch_size=_pick(args.batch_size, sect, "batch_size", 8),
        lr=_pick(args.lr, sect, "lr", 1e-4),
        seed=args.seed,
        target_loss=_pick(args.target_loss, sect, "target_loss", None),
    )
    model = train_denoiser(manifest, sched, _unet_config(args.profile, True),
                           tc, es_cache=es_cache, log=_log)
    model.save(args.out)
    print(f"saved diffusion checkpoint {args.out} "
          f"(final loss {model.meta['final_loss']:.6f})")


def cmd_train_corrector(args):
    from .boost import BoostModel
    from .corrector import (CorrectorTrainConfig, build_corpus,
                            train_corrector)
    from .dataset import load_manifest
    from .denoiser import DenoiserModel

    cfg = _cfg_from(args)
    sect = _section(cfg, "corrector")
    manifest = load_manifest(_require_path(args.manifest, "manifest"))
    corpus = args.corpus or os.path.join(
        os.path.dirname(os.path.abspath(args.out)), "corrector_corpus.npz")
    if not os.path.exists(corpus):
        run_dir = _require_path(args.run_dir, "run directory")
        boost = BoostModel.load(
            _require_path(os.path.join(run_dir, "boost.ckpt"), "boost checkpoint"))
        denoiser = DenoiserModel.load(
            _require_path(os.path.join(run_dir, "denoiser.ckpt"),
                          "denoiser checkpoint"))
        _log(f"building corrector corpus {corpus}")
        build_corpus(corpus, manifest, boost, denoiser,
                     n_maps=int(sect.get("n_maps", 120)),
                     m=int(sect.get("m", 8)),
                     k_range=tuple(sect.get("k_range", (4, 32))),
                     seed=args.seed, log=_log)
    tc = CorrectorTrainConfig(
        steps=_pick(args.steps, sect, "steps", 3000),
        batch_size=_pick(args.batch_size, sect, "batch_size", 16),
        lr=_pick(args.lr, sect, "lr", 1e-3),
        seed=args.seed,
    )
    model = train_corrector(corpus, tc, log=_log)
    model.save(args.out)
    print(f"saved corrector checkpoint {args.out}")


# ------------------------------------------------------------- estimate

def cmd_estimate(args):
    from .estimators import make_estimator
    from .rmap_io import load_samples, save_map

    cfg = _cfg_from(args)
    layout = _load_layout(args.layout)
    samples = load_samples(_require_path(args.samples, "sample file"),
                           layout.height, layout.width)
    estimator = make_estimator(args.method, run_dir=args.run_dir,
                               **_estimator_kwargs(cfg))
    estimate, info = estimator(samples, layout, seed=args.seed)
    save_map(args.out, estimate)
    if args.scores:
        with open(args.scores, "w") as fh:
            json.dump(info, fh, indent=1, default=float)
            fh.write("\n")
    print(f"wrote estimate {args.out} ({args.method}, k={samples.k})")


# ----------------------------------------------------------------- eval

def _print_aggregates(record):
    for scope, stats in sorted(record.aggregates.items()):
        line = " ".join(f"{m}={stats[m]:.6f}" for m in ("mse", "rmse", "nmse", "psnr"))
        print(f"{scope}: {line} (n={stats['n']})")
    if record.incomplete:
        print(f"incomplete: {len(record.missing)} missing -> "
              f"{', '.join(record.missing)}")


def cmd_eval(args):
    from .runner import DEFAULT_KS, ExperimentConfig, evaluate_dataset, run_pipeline

    cfg = _cfg_from(args)
    if args.pred_dir or args.truth_dir:
        if not (args.pred_dir and args.truth_dir):
            raise ConfigurationError("--pred-dir and --truth-dir go together")
        record = evaluate_dataset(args.pred_dir, args.truth_dir,
                                  out_dir=args.out)
        _print_aggregates(record)
        return
    if not args.manifest or not args.method:
        raise ConfigurationError(
            "eval needs either --manifest + --method or --pred-dir + --truth-dir")
    if not args.out:
        raise ConfigurationError("eval needs --out for the run directory")
    ks = tuple(args.k) if args.k else tuple(cfg.get("eval.ks", DEFAULT_KS))
    run_cfg = ExperimentConfig(
        manifest=_require_path(args.manifest, "manifest"),
        method=args.method,
        out_dir=args.out,
        split=args.split,
        ks=ks,
        seed=args.seed,
        run_dir=args.run_dir,
        limit=args.limit,
        estimator=_estimator_kwargs(cfg),
    )
    record = run_pipeline(run_cfg, log=_log if args.verbose else None)
    _print_aggregates(record)
    print(f"record {os.path.join(args.out, 'record.json')} "
          f"content_hash {record.content_hash()}")


# --------------------------------------------------------------- ablate

def cmd_ablate(args):
    from .runner import ablate

    cfg = _cfg_from(args)
    records = ablate(
        manifest_path=_require_path(args.manifest, "manifest"),
        out_dir=args.out,
        split=args.split,
        k=args.k,
        seed=args.seed,
        run_dir=args.run_dir,
        n_maps=args.limit,
        estimator=_estimator_kwargs(cfg) or None,
        log=_log if args.verbose else None,
    )
    for name, record in records.items():
        stats = record.aggregates["overall"]
        print(f"{name}: mse={stats['mse']:.6f} (n={stats['n']})")
    print(f"table {os.path.join(args.out, 'ablation.json')}")


# ----------------------------------------------------------------- plot

def cmd_plot(args):
    from .grids import BuildingLayout
    from .plots import emit_plot
    from .rmap_io import load_map

    cfg = _cfg_from(args)
    obj = load_map(_require_path(args.map, "map file"))
    if isinstance(obj, BuildingLayout):
        obj = obj.occupancy.astype(float)
    colormap = _pick(args.colormap, cfg, "plot.colormap", "viridis")
    try:
        emit_plot(obj, args.out, colormap)
    except OSError as exc:
        raise RadiodiffError(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {args.out}")


# --------------------------------------------------------------- parser

def _add_common(ap):
    ap.add_argument("--config", default=None,
                    help=f"JSON config path (default ${ENV_VAR})")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (JSON-parsed value)")
    ap.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="radiodiff",
        description="Radio map estimation from sparse RSS samples.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    ap = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(ap)
    ap.add_argument("--out", required=True, help="dataset root directory")
    ap.add_argument("--train", type=int, default=600)
    ap.add_argument("--test", type=int, default=50)
    ap.add_argument("--inference", type=int, default=50)
    ap.add_argument("--height", type=int, default=None)
    ap.add_argument("--width", type=int, default=None)
    ap.set_defaults(handler=cmd_synth)

    ap = sub.add_parser("sample", help="draw sensor readings from a map")
    _add_common(ap)
    ap.add_argument("--map", required=True, help="truth .rmap file")
    ap.add_argument("--layout", required=True, help="occupancy .rmap file")
    ap.add_argument("-k", type=int, required=True, help="number of sensors")
    ap.add_argument("--out", required=True, help="output CSV path")
    ap.set_defaults(handler=cmd_sample)

    ap = sub.add_parser("train", help="train a model")
    tsub = ap.add_subparsers(dest="target", metavar="TARGET")
    for target, handler in (("boost", cmd_train_boost),
                            ("diffusion", cmd_train_diffusion),
                            ("corrector", cmd_train_corrector)):
        tp = tsub.add_parser(target)
        _add_common(tp)
        tp.add_argument("--manifest", required=True)
        tp.add_argument("--out", required=True, help="checkpoint path")
        tp.add_argument("--steps", type=int, default=None)
        tp.add_argument("--batch-size", type=int, default=None)
        tp.add_argument("--lr", type=float, default=None)
        tp.add_argument("--profile", choices=("desk", "full"), default="desk")
        if target in ("boost", "diffusion"):
            tp.add_argument("--target-loss", type=float, default=None)
        if target == "diffusion":
            tp.add_argument("--es-cache", required=True,
                            help="enriched-sample cache (.npz); built if absent")
            tp.add_argument("--boost", default=None,
                            help="boost checkpoint, used to build the cache")
        if target == "corrector":
            tp.add_argument("--run-dir", default=None,
                            help="directory with boost.ckpt and denoiser.ckpt")
            tp.add_argument("--corpus", default=None,
                            help="corpus .npz (default: next to --out)")
        tp.set_defaults(handler=handler)

    ap = sub.add_parser("estimate", help="reconstruct one map from samples")
    _add_common(ap)
    ap.add_argument("--method", required=True,
                    choices=("wifidiffusion", "rbf", "spline", "kriging"))
    ap.add_argument("--samples", required=True, help="sample CSV path")
    ap.add_argument("--layout", required=True, help="occupancy .rmap file")
    ap.add_argument("--out", required=True, help="output .rmap path")
    ap.add_argument("--run-dir", default=None,
                    help="checkpoint directory (wifidiffusion)")
    ap.add_argument("--scores", default=None,
                    help="optional JSON path for the election breakdown")
    ap.set_defaults(handler=cmd_estimate)

    ap = sub.add_parser("eval", help="run an estimator over a split, "
                                     "or compare two directories")
    _add_common(ap)
    ap.add_argument("--manifest", default=None)
    ap.add_argument("--method", default=None,
                    choices=("wifidiffusion", "rbf", "spline", "kriging"))
    ap.add_argument("--out", default=None, help="output run directory")
    ap.add_argument("--split", default="inference")
    ap.add_argument("-k", type=int, action="append", default=None,
                    help="sensor count; repeatable")
    ap.add_argument("--limit", type=int, default=None, help="cap map count")
    ap.add_argument("--run-dir", default=None)
    ap.add_argument("--pred-dir", default=None)
    ap.add_argument("--truth-dir", default=None)
    ap.add_argument("--verbose", action="store_true")
    ap.set_defaults(handler=cmd_eval)

    ap = sub.add_parser("ablate", help="2x2 boost/election ablation")
    _add_common(ap)
    ap.add_argument("--manifest", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--run-dir", required=True)
    ap.add_argument("--split", default="test")
    ap.add_argument("-k", type=int, default=8)
    ap.add_argument("--limit", type=int, default=None)
    ap.add_argument("--verbose", action="store_true")
    ap.set_defaults(handler=cmd_ablate)

    ap = sub.add_parser("plot", help="render a map to PNG")
    _add_common(ap)
    ap.add_argument("--map", required=True, help=".rmap file")
    ap.add_argument("--out", required=True, help="output PNG path")
    ap.add_argument("--colormap", default=None)
    ap.set_defaults(handler=cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        return 2
    try:
        handler(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except RadiodiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
