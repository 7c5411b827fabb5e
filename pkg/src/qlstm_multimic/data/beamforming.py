"""Delay-and-sum beamforming with integer-lag cross-correlation delay estimates."""

import logging
from typing import Optional

import numpy as np
from scipy.signal import correlate, correlation_lags

from qlstm_multimic.data.scene import NUM_CHANNELS, MultiChannelScene, delay
from qlstm_multimic.utils.error_handling import DataError, ShapeError

logger = logging.getLogger(__name__)


def estimate_delay(x: np.ndarray, ref: np.ndarray, max_delay: int) -> int:
    """Lag τ (|τ| <= max_delay) maximizing the cross-correlation, so that x[n] ≈ ref[n - τ]."""
    corr = correlate(x, ref, mode="full")
    lags = correlation_lags(len(x), len(ref), mode="full")
    window = np.abs(lags) <= max_delay
    return int(lags[window][np.argmax(corr[window])])


def estimate_delays(channels: np.ndarray, ref_channel: int, max_delay: int) -> np.ndarray:
    """Delay of every channel relative to `ref_channel` (0 for the reference itself).

    Raises:
        DataError: If the reference channel is all zero
    """
    channels = np.asarray(channels, dtype=np.float64)
    if channels.ndim != 2 or channels.shape[0] != NUM_CHANNELS:
        raise ShapeError(f"expected {NUM_CHANNELS} channels, got array of shape {channels.shape}")
    if not 0 <= ref_channel < NUM_CHANNELS:
        raise ShapeError(f"reference channel {ref_channel} outside [0, {NUM_CHANNELS})")
    ref = channels[ref_channel]
    if not np.any(ref):
        raise DataError(f"reference channel {ref_channel} is all zero")
    return np.array(
        [0 if m == ref_channel else estimate_delay(channels[m], ref, max_delay) for m in range(NUM_CHANNELS)],
        dtype=np.int64,
    )


def delay_and_sum(
    scene: MultiChannelScene, ref_channel: int = 0, max_delay: Optional[int] = None
) -> np.ndarray:
    """Advance each channel by its estimated delay and average the four.

    The sum is taken pairwise, ((c0 + c1) + (c2 + c3)) / 4, so four identical
    aligned samples reproduce their common value exactly.
    """
    bound = scene.max_delay if max_delay is None else max_delay
    delays = estimate_delays(scene.channels, ref_channel, bound)
    logger.debug("estimated delays %s against channel %d", delays.tolist(), ref_channel)
    aligned = [delay(scene.channels[m], -int(delays[m])) for m in range(NUM_CHANNELS)]
    return ((aligned[0] + aligned[1]) + (aligned[2] + aligned[3])) / 4.0
