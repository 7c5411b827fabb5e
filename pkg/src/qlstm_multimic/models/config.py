"""Pydantic models for experiment configuration files.

Every model forbids unknown keys so a typo in a JSON config is an error, not
a silently ignored field.
"""

from enum import Enum
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelKind(str, Enum):
    """Network family."""

    QLSTM = "qlstm"
    LSTM = "lstm"


class Provenance(str, Enum):
    """How the four quaternion components of a feature frame were filled."""

    FOUR_MIC = "four_mic"
    COPIED_MIC = "copied_mic"
    BEAMFORMED = "beamformed"


class GateProductMode(str, Enum):
    """Product used to apply QLSTM gates to cell and output values."""

    COMPONENTWISE = "componentwise"
    HAMILTON = "hamilton"


DEFAULT_HIDDEN = {ModelKind.QLSTM: 128, ModelKind.LSTM: 290}


class StrictModel(BaseModel):
    """Base for config models: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class NetworkConfig(StrictModel):
    """Shape of a recurrent stack and its output head."""

    num_layers: int = Field(4, ge=1, description="Number of stacked recurrent layers")
    hidden: int = Field(
        128, ge=1, description="Hidden size: quaternion units for qlstm, real units for lstm"
    )
    bidirectional: bool = Field(True, description="Scan each layer in both time directions")
    dropout_rate: float = Field(0.2, ge=0.0, lt=1.0, description="Inter-layer dropout rate")
    num_classes: int = Field(4, ge=2, description="Number of frame classes")
    gate_product_mode: GateProductMode = Field(
        GateProductMode.COMPONENTWISE,
        description="componentwise (default) or hamilton gating of cell/output values",
    )

    @property
    def directions(self) -> int:
        return 2 if self.bidirectional else 1


class FbankConfig(StrictModel):
    """Log mel filterbank front end."""

    n_filters: int = Field(40, ge=1, description="Number of triangular mel filters")
    frame_len_ms: float = Field(25.0, gt=0, description="Analysis window length")
    hop_ms: float = Field(10.0, gt=0, description="Frame shift")
    window: Literal["hamming"] = Field("hamming", description="Analysis window")
    mel_low_hz: float = Field(20.0, ge=0, description="Lower edge of the filterbank")
    mel_high_hz: Optional[float] = Field(
        None, gt=0, description="Upper edge; defaults to 0.95 x Nyquist"
    )
    log_floor: float = Field(1e-10, gt=0, description="Energy floor applied before the log")
    n_fft: Optional[int] = Field(None, ge=1, description="FFT size; defaults to next power of two")

    def frame_length(self, sample_rate: int) -> int:
        return int(round(sample_rate * self.frame_len_ms / 1000.0))

    def hop_length(self, sample_rate: int) -> int:
        return int(round(sample_rate * self.hop_ms / 1000.0))

    def fft_size(self, sample_rate: int) -> int:
        if self.n_fft is not None:
            return self.n_fft
        return 1 << (self.frame_length(sample_rate) - 1).bit_length()

    def high_hz(self, sample_rate: int) -> float:
        return self.mel_high_hz if self.mel_high_hz is not None else 0.95 * sample_rate / 2.0

    def check_framing(self, sample_rate: int) -> None:
        """Raise ValueError unless frame, hop and FFT sizes are usable at `sample_rate`."""
        frame, hop = self.frame_length(sample_rate), self.hop_length(sample_rate)
        if frame < 1 or hop < 1:
            raise ValueError(
                f"frame_len_ms={self.frame_len_ms} and hop_ms={self.hop_ms} give {frame}-sample frames "
                f"with a {hop}-sample hop at {sample_rate} Hz; both must be >= 1"
            )
        if self.fft_size(sample_rate) < frame:
            raise ValueError(f"n_fft={self.n_fft} is shorter than the {frame}-sample frame")


class SceneConfig(StrictModel):
    """Synthetic four-microphone scene generator settings."""

    sample_rate: int = Field(16000, ge=1000)
    duration_s: float = Field(1.0, gt=0)
    num_classes: int = Field(4, ge=1, description="Number of source spectral templates")
    template_seed: int = Field(0, ge=0, description="Seed of the class templates, shared by all scenes")
    formants_per_class: int = Field(2, ge=1)
    formant_bandwidth_hz: float = Field(200.0, gt=0)
    min_segment_ms: float = Field(150.0, gt=0)
    max_segment_ms: float = Field(400.0, gt=0)
    level_jitter: float = Field(0.5, ge=0, lt=1, description="Per-segment level factor in [1-j, 1+j]")
    max_delay: int = Field(20, ge=0, description="Bound on per-channel integer delays (samples)")
    delays: Optional[list[int]] = Field(None, description="Fixed per-channel delays instead of random ones")
    gain_min: float = Field(0.5, gt=0)
    gain_max: float = Field(1.0, gt=0)
    snr_db: Optional[float] = Field(10.0, description="Per-channel SNR in dB; null disables noise")
    snr_spread_db: float = Field(0.0, ge=0, description="Per-channel SNR drawn from snr_db ± spread")
    noise_kind: Literal["white", "babble"] = "white"
    tail_ms: float = Field(0.0, ge=0, description="Length of the exponential decay tail; 0 disables it")

    @model_validator(mode="after")
    def _check_ranges(self) -> "SceneConfig":
        if self.max_segment_ms < self.min_segment_ms:
            raise ValueError("max_segment_ms must be >= min_segment_ms")
        if self.gain_max < self.gain_min:
            raise ValueError("gain_max must be >= gain_min")
        if self.delays is not None:
            if len(self.delays) != 4:
                raise ValueError("delays must list exactly 4 channels")
            if any(d < 0 or d > self.max_delay for d in self.delays):
                raise ValueError(f"delays must lie in [0, {self.max_delay}]")
        if self.snr_db is not None:
            low, high = self.snr_db - self.snr_spread_db, self.snr_db + self.snr_spread_db
            if low < 0.0 or high > 30.0:
                raise ValueError("snr_db ± snr_spread_db must stay within [0, 30] dB")
        return self

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))


class DatasetConfig(StrictModel):
    """Paired multi-provenance dataset generation."""

    scene: SceneConfig = Field(default_factory=SceneConfig)
    fbank: FbankConfig = Field(default_factory=FbankConfig)
    n_train: int = Field(20, ge=1)
    n_valid: int = Field(5, ge=1)
    n_test: int = Field(5, ge=1)
    seed: int = Field(0, ge=0)
    normalize: bool = Field(True, description="Per-utterance mean/variance normalization")
    copied_channel: int = Field(0, ge=0, le=3, description="Microphone replicated by the copied control")
    ref_channel: int = Field(0, ge=0, le=3, description="Reference microphone of the beamformer")
    output_dir: Path = Path("data/synthetic")

    @model_validator(mode="after")
    def _check_framing(self) -> "DatasetConfig":
        self.fbank.check_framing(self.scene.sample_rate)
        return self


class TrainConfig(StrictModel):
    """One training run."""

    model: ModelKind = ModelKind.QLSTM
    provenance: Provenance = Provenance.FOUR_MIC
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    epochs: int = Field(24, ge=1)
    initial_lr: float = Field(1.6e-3, gt=0)
    rmsprop_decay: float = Field(0.99, gt=0, lt=1)
    rmsprop_eps: float = Field(1e-8, gt=0)
    batch_size: int = Field(8, ge=1)
    clip_norm: Optional[float] = Field(5.0, gt=0, description="Global gradient norm bound; null disables")
    seed: int = Field(0, ge=0)
    dataset: Path
    output_dir: Path = Path("runs/train")
    resume_from: Optional[Path] = None
    record_wall_time: bool = Field(
        False, description="Write measured wall time into metrics.jsonl (breaks byte-identity)"
    )

    @model_validator(mode="after")
    def _resolve_hidden(self) -> "TrainConfig":
        if "hidden" not in self.network.model_fields_set:
            self.network = self.network.model_copy(update={"hidden": DEFAULT_HIDDEN[self.model]})
        return self


class AblationConfig(StrictModel):
    """Model x provenance experiment matrix."""

    dataset: Path
    output_dir: Path = Path("runs/ablation")
    models: list[ModelKind] = Field(default_factory=lambda: [ModelKind.QLSTM, ModelKind.LSTM])
    provenances: list[Provenance] = Field(default_factory=lambda: list(Provenance))
    runs: int = Field(5, ge=1, description="Seeds per cell")
    base_seed: int = Field(0, ge=0)
    epochs: int = Field(10, ge=1)
    initial_lr: float = Field(1.6e-3, gt=0)
    batch_size: int = Field(8, ge=1)
    clip_norm: Optional[float] = Field(5.0, gt=0)
    qlstm_network: NetworkConfig = Field(
        default_factory=lambda: NetworkConfig(num_layers=1, hidden=16, dropout_rate=0.0)
    )
    lstm_network: Optional[NetworkConfig] = Field(
        None, description="Defaults to qlstm_network with a parameter-matched hidden size"
    )
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _nonempty(self) -> "AblationConfig":
        if not self.models or not self.provenances:
            raise ValueError("models and provenances must be non-empty")
        return self
