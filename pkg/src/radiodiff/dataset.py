"""Dataset generation and the JSON manifest tying maps, layouts and sidecars."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError
from .rmap_io import load_map, save_map
from .synth import SynthParams, Transmitter, draw_transmitters, gen_layout, synth_map

MANIFEST_VERSION = 1
SPLITS = ("train", "test", "inference")

__all__ = [
    "ManifestEntry",
    "DatasetManifest",
    "build_dataset",
    "load_manifest",
    "save_transmitters",
    "load_transmitters",
]


@dataclass(frozen=True)
class ManifestEntry:
    split: str
    map_path: str
    layout_path: str
    tx_path: str

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ParameterError(f"unknown split {self.split!r}")


@dataclass
class DatasetManifest:
    height: int
    width: int
    entries: list
    version: int = MANIFEST_VERSION
    root: str = "."

    def select(self, split):
        if split not in SPLITS:
            raise ParameterError(f"unknown split {split!r}")
        return [e for e in self.entries if e.split == split]

    def counts(self):
        return {s: sum(1 for e in self.entries if e.split == s) for s in SPLITS}

    def resolve(self, rel):
        return os.path.join(self.root, rel)

    def load_entry(self, entry):
        """(truth map, layout, transmitters) for one manifest row."""
        truth = load_map(self.resolve(entry.map_path))
        layout = load_map(self.resolve(entry.layout_path))
        txs = load_transmitters(self.resolve(entry.tx_path))
        return truth, layout, txs

    def validate(self):
        seen = set()
        for entry in self.entries:
            for rel in (entry.map_path, entry.layout_path, entry.tx_path):
                if not os.path.exists(self.resolve(rel)):
                    raise FormatError(f"manifest references missing file {rel}", offset=0)
            if entry.map_path in seen:
                raise FormatError(f"map {entry.map_path} listed twice", offset=0)
            seen.add(entry.map_path)

    def save(self, path):
        doc = {
            "version": self.version,
            "height": self.height,
            "width": self.width,
            "entries": [
                {"split": e.split, "map": e.map_path, "layout": e.layout_path,
                 "txs": e.tx_path}
                for e in self.entries
            ],
        }
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)


def load_manifest(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"manifest is not valid JSON: {exc}", offset=exc.pos) from None
    if doc.get("version") != MANIFEST_VERSION:
        raise FormatError(f"unsupported manifest version {doc.get('version')}", offset=0)
    entries = [
        ManifestEntry(e["split"], e["map"], e["layout"], e["txs"])
        for e in doc["entries"]
    ]
    return DatasetManifest(doc["height"], doc["width"], entries,
                           version=doc["version"], root=os.path.dirname(path) or ".")


def save_transmitters(path, txs):
    doc = {
        "transmitters": [
            {"row": t.row, "col": t.col, "power": t.power,
             "pathloss_exponent": t.pathloss_exponent}
            for t in txs
        ]
    }
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_transmitters(path):
    with open(path) as fh:
        doc = json.load(fh)
    return [
        Transmitter(t["row"], t["col"], t["power"], t["pathloss_exponent"])
        for t in doc["transmitters"]
    ]


def build_dataset(root, params, counts, seed):
    """Generate (map, layout, tx) triples per split and write a manifest.

    counts is (train, test, inference).  Each map gets its own child of
    the master SeedSequence, so regeneration with the same seed is
    byte-identical and generation could be farmed out per map.
    """
    if len(counts) != 3:
        raise ParameterError("counts must be (train, test, inference)")
    if any(c < 0 for c in counts):
        raise ParameterError("split counts must be non-negative")
    os.makedirs(root, exist_ok=True)
    total = sum(counts)
    children = np.random.SeedSequence(seed).spawn(total)
    entries = []
    idx = 0
    for split, n in zip(SPLITS, counts):
        split_dir = os.path.join(root, split)
        os.makedirs(split_dir, exist_ok=True)
        for i in range(n):
            rng = np.random.default_rng(children[idx])
            idx += 1
            layout = gen_layout(params, rng)
            txs = draw_transmitters(params, layout, rng)
            truth = synth_map(layout, txs, params)
            stem = f"{i:05d}"
            rel_map = os.path.join(split, f"map_{stem}.rmap")
            rel_lay = os.path.join(split, f"lay_{stem}.rmap")
            rel_tx = os.path.join(split, f"tx_{stem}.json")
            save_map(os.path.join(root, rel_map), truth)
            save_map(os.path.join(root, rel_lay), layout)
            save_transmitters(os.path.join(root, rel_tx), txs)
            entries.append(ManifestEntry(split, rel_map, rel_lay, rel_tx))
    manifest = DatasetManifest(params.height, params.width, entries, root=root)
    manifest.save(os.path.join(root, "manifest.json"))
    return manifest
