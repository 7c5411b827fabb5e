"""Synthetic four-microphone scenes.

A clean source switches between K class templates at random segment
boundaries; each template is a small set of band-pass "formants" shaping white
noise. Every channel is gain·delay(source), optionally convolved with a short
random exponential-decay tail, plus independent noise scaled to an exact SNR.
Frame labels are the template identity at each frame center.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

from qlstm_multimic.models.config import FbankConfig, SceneConfig
from qlstm_multimic.utils.error_handling import DataError

logger = logging.getLogger(__name__)

NUM_CHANNELS = 4
_WARMUP = 256  # samples discarded after band-pass filtering


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    label: int


@dataclass(frozen=True)
class MultiChannelScene:
    """Four equal-length channels with their ground truth."""

    sample_rate: int
    channels: np.ndarray  # [4, N]
    source: np.ndarray  # [N]
    delays: tuple[int, ...]
    gains: tuple[float, ...]
    snr_db: tuple[Optional[float], ...]
    tail_ms: float
    max_delay: int
    segments: tuple[Segment, ...]
    frame_labels: np.ndarray  # [T]

    def __post_init__(self) -> None:
        if self.channels.ndim != 2 or self.channels.shape[0] != NUM_CHANNELS:
            raise DataError(f"a scene holds exactly {NUM_CHANNELS} channels, got {self.channels.shape}")
        if any(abs(d) > self.max_delay for d in self.delays):
            raise DataError(f"delays {self.delays} exceed the bound {self.max_delay}")

    @property
    def num_samples(self) -> int:
        return self.channels.shape[1]


def class_templates(cfg: SceneConfig) -> list[np.ndarray]:
    """Second-order-section band-pass filters, one bank per class.

    Formant centers are drawn from cfg.template_seed only, so every scene built
    from the same config shares the templates.
    """
    rng = np.random.default_rng(cfg.template_seed)
    nyquist = cfg.sample_rate / 2.0
    low_edge, high_edge = 150.0, min(4000.0, 0.8 * nyquist)
    half_band = cfg.formant_bandwidth_hz / 2.0
    templates = []
    for _ in range(cfg.num_classes):
        centers = np.sort(rng.uniform(low_edge + half_band, high_edge - half_band, cfg.formants_per_class))
        sections = [
            butter(2, [c - half_band, c + half_band], btype="bandpass", fs=cfg.sample_rate, output="sos")
            for c in centers
        ]
        templates.append(np.concatenate(sections, axis=0))
    return templates


def _shaped_noise(rng: np.random.Generator, sos_bank: np.ndarray, length: int) -> np.ndarray:
    # two second-order sections per formant
    out = np.zeros(length)
    for k in range(0, sos_bank.shape[0], 2):
        excitation = rng.standard_normal(length + _WARMUP)
        out += sosfilt(sos_bank[k : k + 2], excitation)[_WARMUP:]
    rms = math.sqrt(float(np.mean(out**2)))
    return out / rms if rms > 0 else out


def render_segments(
    rng: np.random.Generator, cfg: SceneConfig, templates: list[np.ndarray], length: int
) -> tuple[np.ndarray, tuple[Segment, ...]]:
    """Concatenate template-shaped segments of random class, length and level."""
    lo = max(1, int(round(cfg.min_segment_ms * cfg.sample_rate / 1000.0)))
    hi = max(lo, int(round(cfg.max_segment_ms * cfg.sample_rate / 1000.0)))
    signal = np.zeros(length)
    segments = []
    start = 0
    while start < length:
        end = min(length, start + int(rng.integers(lo, hi + 1)))
        label = int(rng.integers(0, len(templates)))
        level = rng.uniform(1.0 - cfg.level_jitter, 1.0 + cfg.level_jitter)
        signal[start:end] = level * _shaped_noise(rng, templates[label], end - start)
        segments.append(Segment(start, end, label))
        start = end
    return signal, tuple(segments)


def frame_labels(segments: tuple[Segment, ...], num_samples: int, fbank: FbankConfig, sample_rate: int) -> np.ndarray:
    """Class of the segment under each frame center; T = 1 + (N - frame) // hop."""
    frame, hop = fbank.frame_length(sample_rate), fbank.hop_length(sample_rate)
    if num_samples < frame:
        return np.zeros(0, dtype=np.int64)
    count = 1 + (num_samples - frame) // hop
    centers = np.arange(count) * hop + frame // 2
    starts = np.array([s.start for s in segments])
    labels = np.array([s.label for s in segments], dtype=np.int64)
    return labels[np.searchsorted(starts, centers, side="right") - 1]


def delay(signal: np.ndarray, samples: int) -> np.ndarray:
    """y[n] = x[n - samples], zero-filled; negative values advance."""
    out = np.zeros_like(signal)
    if samples >= 0:
        out[samples:] = signal[: len(signal) - samples]
    else:
        out[:samples] = signal[-samples:]
    return out


def decay_tail(rng: np.random.Generator, length: int) -> np.ndarray:
    """Impulse response 1 followed by random taps under an exponential envelope."""
    taps = np.zeros(length + 1)
    taps[0] = 1.0
    n = np.arange(1, length + 1)
    taps[1:] = 0.3 * rng.standard_normal(length) * np.exp(-4.0 * n / length)
    return taps


def add_noise_at_snr(signal: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """signal + noise scaled so that 10·log10(P_signal / P_noise) equals snr_db."""
    p_signal = float(np.mean(signal**2))
    p_noise = float(np.mean(noise**2))
    if p_noise == 0.0 or p_signal == 0.0:
        return signal.copy()
    scale = math.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return signal + scale * noise


def synth_scene(cfg: SceneConfig, seed: int, fbank: Optional[FbankConfig] = None) -> MultiChannelScene:
    """Draw one scene; identical (cfg, seed) pairs give identical scenes."""
    fbank = fbank or FbankConfig()
    rng = np.random.default_rng(seed)
    n = cfg.num_samples
    templates = class_templates(cfg)
    source, segments = render_segments(rng, cfg, templates, n)

    if cfg.delays is not None:
        delays = tuple(int(d) for d in cfg.delays)
    else:
        delays = tuple(int(d) for d in rng.integers(0, cfg.max_delay + 1, NUM_CHANNELS))
    gains = tuple(float(g) for g in rng.uniform(cfg.gain_min, cfg.gain_max, NUM_CHANNELS))
    tail_len = int(round(cfg.tail_ms * cfg.sample_rate / 1000.0))

    channels = np.empty((NUM_CHANNELS, n))
    snrs: list[Optional[float]] = []
    for m in range(NUM_CHANNELS):
        x = gains[m] * delay(source, delays[m])
        if tail_len > 0:
            x = lfilter(decay_tail(rng, tail_len), [1.0], x)
        if cfg.snr_db is None:
            snrs.append(None)
        else:
            snr = float(cfg.snr_db + rng.uniform(-cfg.snr_spread_db, cfg.snr_spread_db))
            if cfg.noise_kind == "babble":
                noise, _ = render_segments(rng, cfg, templates, n)
            else:
                noise = rng.standard_normal(n)
            x = add_noise_at_snr(x, noise, snr)
            snrs.append(snr)
        channels[m] = x

    return MultiChannelScene(
        sample_rate=cfg.sample_rate,
        channels=channels,
        source=source,
        delays=delays,
        gains=gains,
        snr_db=tuple(snrs),
        tail_ms=cfg.tail_ms,
        max_delay=cfg.max_delay,
        segments=segments,
        frame_labels=frame_labels(segments, n, fbank, cfg.sample_rate),
    )


def measured_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    """Empirical SNR of `noisy` against the clean component it contains."""
    residual = noisy - clean
    return 10.0 * math.log10(float(np.mean(clean**2)) / float(np.mean(residual**2)))
