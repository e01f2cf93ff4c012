"""Precomputed enriched-sample variants for denoiser training.

Running the boost block inside the diffusion training loop would spend
most of each step on rough-map inference, so the enrichment is staged:
a handful of variants per training map (different sensor draws and k)
are computed once and sampled from during training.
"""

from __future__ import annotations

import numpy as np

from .boost import load_split, manifest_hash, predict_rough
from .enrich import assemble_es, scaled_budget
from .errors import ParameterError
from .structure import critical_points, structure_field
from .synth import place_sensors

__all__ = ["build_es_cache", "load_es_cache", "enrich_samples"]


def enrich_samples(model, samples, layout, seed):
    """Full boost block for one sample set: rough map, critical points, ES.

    With model=None the enrichment degenerates to the measured samples
    alone, which is also the boost-off arm of the ablation.
    """
    if model is None:
        return None, assemble_es_from_samples(samples)
    x_a = predict_rough(model, samples, layout)
    budget = scaled_budget(layout.shape[0], layout.shape[1])
    field = structure_field(x_a)
    crit = critical_points(field, layout, max_n=budget)
    es = assemble_es(x_a, samples, crit, n_random=budget, seed=seed, layout=layout)
    return x_a, es


def assemble_es_from_samples(samples):
    from .grids import EnrichedSampleSet

    origin = np.array(["measured"] * samples.k, dtype=object)
    return EnrichedSampleSet(samples.height, samples.width, samples.rows,
                             samples.cols, samples.rss, origin)


def build_es_cache(out, manifest, model, k_range, seed, variants=4, log=None):
    """Write an npz of dense ES variants for every train-split map."""
    lo, hi = k_range
    if not 0 <= lo <= hi:
        raise ParameterError(f"bad sensor count range {k_range}")
    pairs = load_split(manifest, "train")
    if not pairs:
        raise ParameterError("train split is empty")
    rng = np.random.default_rng(seed)
    es_stack, map_index, ks = [], [], []
    for i, (truth, layout) in enumerate(pairs):
        for _ in range(variants):
            k = int(rng.integers(lo, hi + 1))
            samples = place_sensors(truth, layout, k, rng)
            _, es = enrich_samples(model, samples, layout, rng)
            es_stack.append(es.dense().astype(np.float32))
            map_index.append(i)
            ks.append(k)
        if log and (i + 1) % 100 == 0:
            log(f"escache: {i + 1}/{len(pairs)} maps")
    np.savez_compressed(
        out,
        es=np.stack(es_stack),
        map_index=np.asarray(map_index, dtype=np.int64),
        k=np.asarray(ks, dtype=np.int64),
        dataset_hash=np.bytes_(manifest_hash(manifest) or ""),
    )


def load_es_cache(path):
    with np.load(path) as doc:
        return {
            "es": doc["es"].astype(np.float64),
            "map_index": doc["map_index"],
            "k": doc["k"],
            "dataset_hash": bytes(doc["dataset_hash"]).decode() or None,
        }
