"""Shared fixtures: tiny configs and a tiny dataset on disk."""

from pathlib import Path

import numpy as np
import pytest

from qlstm_multimic.data.dataset import build_dataset, save_dataset
from qlstm_multimic.models.config import DatasetConfig, FbankConfig, NetworkConfig, SceneConfig

# Exact real-parameter counts of the full-size configurations at the harness's
# feature width (40 FBANK filters per microphone, 4 classes).
QLSTM_128_COUNT = 5_427_204  # 4 bidirectional layers, 128 quaternion units, 40 input quaternions
LSTM_290_COUNT = 7_110_804  # 4 bidirectional layers, 290 units, 160 real inputs
LSTM_PARITY_HIDDEN = 252
LSTM_PARITY_COUNT = 5_412_964


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_scene_config() -> SceneConfig:
    return SceneConfig(
        sample_rate=8000,
        duration_s=0.3,
        min_segment_ms=60,
        max_segment_ms=120,
        max_delay=6,
        snr_db=20.0,
    )


@pytest.fixture
def tiny_fbank_config() -> FbankConfig:
    return FbankConfig(n_filters=8)


@pytest.fixture
def tiny_dataset_config(tiny_scene_config, tiny_fbank_config, tmp_path) -> DatasetConfig:
    return DatasetConfig(
        scene=tiny_scene_config,
        fbank=tiny_fbank_config,
        n_train=6,
        n_valid=2,
        n_test=2,
        seed=7,
        output_dir=tmp_path / "data",
    )


@pytest.fixture
def tiny_dataset_dir(tiny_dataset_config) -> Path:
    save_dataset(build_dataset(tiny_dataset_config), tiny_dataset_config.output_dir)
    return tiny_dataset_config.output_dir


@pytest.fixture
def tiny_network() -> NetworkConfig:
    return NetworkConfig(num_layers=1, hidden=2, bidirectional=True, dropout_rate=0.0)
