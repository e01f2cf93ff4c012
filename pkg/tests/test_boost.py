"""Rough-map predictor: batch assembly, training loop, persistence."""

import numpy as np
import pytest
import torch

from radiodiff.attunet import AttUnetConfig
from radiodiff.boost import (BoostModel, TrainConfig, batch_input, load_split,
                             manifest_hash, predict_rough, train_attunet)
from radiodiff.checkpoint import save_checkpoint
from radiodiff.dataset import build_dataset
from radiodiff.errors import ParameterError, ShapeError, TrainingError
from radiodiff.grids import BuildingLayout, RadioMap, SampleSet
from radiodiff.synth import place_sensors


def tiny_net_config(resolution=32, **kw):
    base = dict(resolution=resolution, channels=(8, 16, 16, 8),
                attention_layers=(3,), groups=4)
    base.update(kw)
    return AttUnetConfig(**base)


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.steps == 3000
        assert cfg.k_range == (4, 32)
        assert cfg.target_loss is None

    @pytest.mark.parametrize("kw", [
        {"steps": 0},
        {"batch_size": 0},
        {"k_range": (10, 4)},
        {"k_range": (-1, 4)},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ParameterError):
            TrainConfig(**kw)


class TestBatchInput:
    def test_channel_order(self, rng):
        occ = np.zeros((8, 8), dtype=np.int64)
        occ[2, 3] = 1
        layout = BuildingLayout(occ)
        truth = RadioMap(rng.uniform(0.1, 0.9, (8, 8)))
        samples = place_sensors(truth, layout, 5, rng)
        x = batch_input(samples, layout)
        assert x.shape == (3, 8, 8)
        assert np.array_equal(x[0], samples.dense())
        assert np.array_equal(x[1], occ.astype(np.float64))
        assert np.array_equal(x[2], samples.mask())

    def test_mask_distinguishes_measured_zero(self):
        layout = BuildingLayout(np.zeros((4, 4), dtype=np.int64))
        samples = SampleSet(4, 4, rows=np.array([1]), cols=np.array([2]),
                            rss=np.array([0.0]))
        x = batch_input(samples, layout)
        assert x[0, 1, 2] == 0.0
        assert x[2, 1, 2] == 1.0
        assert x[2].sum() == 1.0


class TestLoadSplit:
    def test_pairs(self, tiny_dataset):
        pairs = load_split(tiny_dataset, "train")
        assert len(pairs) == 3
        for truth, layout in pairs:
            assert isinstance(truth, RadioMap)
            assert isinstance(layout, BuildingLayout)
            assert truth.shape == layout.shape == (32, 32)

    def test_manifest_hash(self, tiny_dataset):
        h = manifest_hash(tiny_dataset)
        assert isinstance(h, str) and len(h) == 16
        assert manifest_hash(tiny_dataset) == h


class TestTraining:
    def test_loss_decreases(self, tiny_dataset):
        cfg = tiny_net_config()
        tc = TrainConfig(steps=60, batch_size=4, lr=3e-3, k_range=(4, 12),
                         seed=5, log_every=1000)
        model = train_attunet(tiny_dataset, cfg, tc)
        hist = model.meta["loss_history"]
        assert len(hist) == 60
        assert np.mean(hist[-10:]) < np.mean(hist[:10])
        assert model.meta["steps_run"] == 60
        assert model.meta["dataset_hash"] == manifest_hash(tiny_dataset)

    def test_target_loss_stops_early(self, tiny_dataset):
        tc = TrainConfig(steps=500, batch_size=2, target_loss=1e9, seed=5)
        model = train_attunet(tiny_dataset, tiny_net_config(), tc)
        # smoothed loss is below the huge target after the first step
        assert model.meta["steps_run"] == 1

    def test_seed_reproducibility(self, tiny_dataset):
        tc = TrainConfig(steps=4, batch_size=2, seed=21)
        runs = [train_attunet(tiny_dataset, tiny_net_config(), tc)
                for _ in range(2)]
        assert runs[0].meta["loss_history"] == runs[1].meta["loss_history"]
        a = runs[0].state_arrays()
        b = runs[1].state_arrays()
        assert sorted(a) == sorted(b)
        for name in a:
            assert np.array_equal(a[name], b[name]), name

    def test_resolution_mismatch(self, tiny_dataset):
        tc = TrainConfig(steps=2, batch_size=2)
        with pytest.raises(ShapeError):
            train_attunet(tiny_dataset, tiny_net_config(resolution=64), tc)

    def test_empty_split(self, tmp_path, tiny_params):
        manifest = build_dataset(str(tmp_path / "empty"), tiny_params,
                                 (0, 1, 0), seed=3)
        with pytest.raises(TrainingError):
            train_attunet(manifest, tiny_net_config(), TrainConfig(steps=2))


@pytest.fixture(scope="module")
def trained(request):
    tiny = request.getfixturevalue("tiny_dataset")
    tc = TrainConfig(steps=30, batch_size=4, lr=3e-3, k_range=(4, 12), seed=9)
    return train_attunet(tiny, tiny_net_config(), tc)


class TestPredictRough:
    def test_output_contract(self, trained, tiny_dataset, rng):
        truth, layout = load_split(tiny_dataset, "test")[0]
        samples = place_sensors(truth, layout, 8, rng)
        rough = predict_rough(trained, samples, layout)
        assert isinstance(rough, RadioMap)
        assert rough.shape == (32, 32)
        assert rough.values.min() >= 0.0
        assert rough.values.max() <= 1.0
        assert np.all(rough.values[layout.occupancy == 1] == 0.0)

    def test_type_checks(self, trained):
        layout = BuildingLayout(np.zeros((32, 32), dtype=np.int64))
        samples = SampleSet(32, 32, rows=np.array([0]), cols=np.array([0]),
                            rss=np.array([0.5]))
        with pytest.raises(TypeError):
            predict_rough(trained, samples.dense(), layout)
        with pytest.raises(TypeError):
            predict_rough(trained, samples, layout.occupancy)

    def test_shape_checks(self, trained):
        layout16 = BuildingLayout(np.zeros((16, 16), dtype=np.int64))
        samples16 = SampleSet(16, 16, rows=np.array([0]), cols=np.array([0]),
                              rss=np.array([0.5]))
        layout32 = BuildingLayout(np.zeros((32, 32), dtype=np.int64))
        with pytest.raises(ShapeError):
            predict_rough(trained, samples16, layout32)
        with pytest.raises(ShapeError):
            predict_rough(trained, samples16, layout16)


class TestPersistence:
    def test_save_load_round_trip(self, trained, tmp_path, rng):
        path = str(tmp_path / "model.ckpt")
        trained.save(path)
        clone = BoostModel.load(path)
        assert clone.cfg == trained.cfg
        assert clone.meta["kind"] == "boost"
        assert clone.meta["config_hash"] == trained.cfg.config_hash()
        a, b = trained.state_arrays(), clone.state_arrays()
        assert sorted(a) == sorted(b)
        for name in a:
            assert np.array_equal(a[name], b[name]), name

    def test_loaded_model_predicts_identically(self, trained, tmp_path, rng):
        path = str(tmp_path / "model.ckpt")
        trained.save(path)
        clone = BoostModel.load(path)
        layout = BuildingLayout(np.zeros((32, 32), dtype=np.int64))
        truth = RadioMap(rng.uniform(0.0, 1.0, (32, 32)))
        samples = place_sensors(truth, layout, 10, rng)
        x = predict_rough(trained, samples, layout)
        y = predict_rough(clone, samples, layout)
        assert np.array_equal(x.values, y.values)

    def test_wrong_kind_rejected(self, tmp_path):
        path = str(tmp_path / "other.ckpt")
        save_checkpoint(path, {"kind": "corrector"},
                        {"w": np.zeros(3, dtype=np.float32)})
        with pytest.raises(ParameterError):
            BoostModel.load(path)
