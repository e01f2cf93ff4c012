import numpy as np
import pytest

from radiodiff.dataset import build_dataset
from radiodiff.synth import SynthParams


@pytest.fixture(scope="session")
def tiny_params():
    return SynthParams(height=32, width=32, density=0.15, seed=11)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory, tiny_params):
    root = tmp_path_factory.mktemp("tinyds")
    return build_dataset(str(root), tiny_params, (3, 2, 2), seed=11)


@pytest.fixture(scope="session")
def tiny_boost(tiny_dataset):
    from radiodiff.attunet import AttUnetConfig
    from radiodiff.boost import TrainConfig, train_attunet

    cfg = AttUnetConfig(resolution=32, channels=(8, 16, 16, 8),
                        attention_layers=(3,), groups=4)
    tc = TrainConfig(steps=25, batch_size=4, lr=3e-3, k_range=(4, 12), seed=2)
    return train_attunet(tiny_dataset, cfg, tc)


@pytest.fixture(scope="session")
def tiny_es_cache(tmp_path_factory, tiny_dataset, tiny_boost):
    from radiodiff.escache import build_es_cache

    out = str(tmp_path_factory.mktemp("cache") / "es.npz")
    build_es_cache(out, tiny_dataset, tiny_boost, k_range=(4, 10), seed=8,
                   variants=3)
    return out


@pytest.fixture(scope="session")
def tiny_denoiser(tiny_dataset, tiny_es_cache):
    from radiodiff.attunet import AttUnetConfig
    from radiodiff.denoiser import DenoiserTrainConfig, train_denoiser
    from radiodiff.schedule import make_schedule

    cfg = AttUnetConfig(resolution=32, channels=(8, 16, 16, 8),
                        attention_layers=(3,), groups=4, time_embed=True)
    sched = make_schedule(T=20, beta_1=1e-3, beta_T=0.05)
    tc = DenoiserTrainConfig(steps=6, batch_size=4, seed=5)
    return train_denoiser(tiny_dataset, sched, cfg, tc,
                          es_cache=tiny_es_cache)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
