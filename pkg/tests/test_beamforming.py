"""Tests for delay estimation and delay-and-sum beamforming."""

import numpy as np
import pytest

from qlstm_multimic.data.beamforming import delay_and_sum, estimate_delay, estimate_delays
from qlstm_multimic.data.scene import MultiChannelScene, delay, synth_scene
from qlstm_multimic.utils.error_handling import DataError, ShapeError


def noiseless(cfg, delays):
    return cfg.model_copy(update={"snr_db": None, "delays": delays, "gain_min": 1.0, "gain_max": 1.0})


def scene_from_channels(channels, max_delay=6):
    return MultiChannelScene(
        sample_rate=8000,
        channels=channels,
        source=np.zeros(channels.shape[1]),
        delays=(0, 0, 0, 0),
        gains=(1.0, 1.0, 1.0, 1.0),
        snr_db=(None, None, None, None),
        tail_ms=0.0,
        max_delay=max_delay,
        segments=(),
        frame_labels=np.zeros(0, dtype=np.int64),
    )


def test_identical_channels_give_the_common_channel(tiny_scene_config):
    scene = synth_scene(noiseless(tiny_scene_config, [0, 0, 0, 0]), seed=3)
    assert np.array_equal(delay_and_sum(scene), scene.channels[0])


def test_recovers_known_delays(tiny_scene_config):
    delays = [0, 3, 5, 2]
    scene = synth_scene(noiseless(tiny_scene_config, delays), seed=4)
    assert estimate_delays(scene.channels, 0, scene.max_delay).tolist() == delays
    assert estimate_delays(scene.channels, 2, scene.max_delay).tolist() == [d - 5 for d in delays]


def test_aligned_sum_reproduces_the_source(tiny_scene_config):
    delays = [0, 3, 5, 2]
    scene = synth_scene(noiseless(tiny_scene_config, delays), seed=4)
    overlap = scene.num_samples - max(delays)
    out = delay_and_sum(scene)
    assert np.max(np.abs(out[:overlap] - scene.source[:overlap])) <= 1e-9


def test_estimate_delay_sign(rng):
    ref = rng.standard_normal(500)
    assert estimate_delay(delay(ref, 4), ref, 10) == 4
    assert estimate_delay(delay(ref, -3), ref, 10) == -3


def test_noise_only_channels(rng):
    scene = scene_from_channels(rng.standard_normal((4, 800)))
    out = delay_and_sum(scene)
    assert out.shape == (800,)
    assert np.isfinite(out).all()
    assert np.all(np.abs(estimate_delays(scene.channels, 0, 6)) <= 6)


def test_all_zero_reference_rejected():
    scene = scene_from_channels(np.zeros((4, 200)))
    with pytest.raises(DataError):
        delay_and_sum(scene)


def test_wrong_channel_count(rng):
    with pytest.raises(ShapeError):
        estimate_delays(rng.standard_normal((3, 100)), 0, 5)
    with pytest.raises(ShapeError):
        estimate_delays(rng.standard_normal((4, 100)), 4, 5)
