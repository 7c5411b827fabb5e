"""Log mel filterbank (FBANK) features."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from qlstm_multimic.models.config import FbankConfig
from qlstm_multimic.utils.error_handling import ConfigValidationError, DataError


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_edges(cfg: FbankConfig, sample_rate: int) -> np.ndarray:
    """n_filters + 2 edge frequencies (Hz), equally spaced on the mel scale."""
    low, high = cfg.mel_low_hz, cfg.high_hz(sample_rate)
    if not 0.0 <= low < high <= sample_rate / 2.0:
        raise DataError(f"mel range [{low}, {high}] Hz is invalid at {sample_rate} Hz")
    return mel_to_hz(np.linspace(hz_to_mel(low), hz_to_mel(high), cfg.n_filters + 2))


def mel_center_frequencies(cfg: FbankConfig, sample_rate: int) -> np.ndarray:
    return mel_edges(cfg, sample_rate)[1:-1]


def mel_filterbank(cfg: FbankConfig, sample_rate: int) -> np.ndarray:
    """Triangular filters [n_filters, n_fft // 2 + 1] evaluated at the FFT bin frequencies.

    Each triangle rises from the previous center to its own and falls to the
    next, so neighbouring filters sum to one between the first and last center.
    """
    edges = mel_edges(cfg, sample_rate)
    freqs = np.fft.rfftfreq(cfg.fft_size(sample_rate), d=1.0 / sample_rate)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def framing(cfg: FbankConfig, sample_rate: int) -> tuple[int, int]:
    """(frame length, hop) in samples."""
    try:
        cfg.check_framing(sample_rate)
    except ValueError as e:
        raise ConfigValidationError(str(e)) from e
    return cfg.frame_length(sample_rate), cfg.hop_length(sample_rate)


def num_frames(num_samples: int, cfg: FbankConfig, sample_rate: int) -> int:
    frame, hop = framing(cfg, sample_rate)
    if num_samples < frame:
        return 0
    return 1 + (num_samples - frame) // hop


def fbank(wave: np.ndarray, cfg: FbankConfig, sample_rate: int = 16000) -> np.ndarray:
    """Framing, Hamming window, power spectrum, mel filters and floored log.

    Returns:
        Log energies [T, n_filters] with T = 1 + (len - frame) // hop

    Raises:
        ConfigValidationError: If the frame, hop or FFT size is unusable at `sample_rate`
        DataError: If the waveform is shorter than one frame
    """
    wave = np.asarray(wave, dtype=np.float64)
    frame, hop = framing(cfg, sample_rate)
    if wave.ndim != 1 or wave.shape[0] < frame:
        raise DataError(f"waveform of {wave.shape} samples is shorter than one {frame}-sample frame")

    frames = sliding_window_view(wave, frame)[::hop]
    window = get_window(cfg.window, frame, fftbins=False)
    spectrum = np.fft.rfft(frames * window, n=cfg.fft_size(sample_rate), axis=-1)
    power = spectrum.real**2 + spectrum.imag**2
    energies = power @ mel_filterbank(cfg, sample_rate).T
    return np.log(np.maximum(energies, cfg.log_floor))


def cmvn(feats: np.ndarray) -> np.ndarray:
    """Per-utterance mean and variance normalization of each feature column."""
    mean = feats.mean(axis=0, keepdims=True)
    std = feats.std(axis=0, keepdims=True)
    return (feats - mean) / np.where(std > 0.0, std, 1.0)
