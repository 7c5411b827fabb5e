"""Quaternion packing of per-microphone features.

Microphone m fills quaternion component m: for every frame t and feature f the
quaternion is (M1[t, f], M2[t, f], M3[t, f], M4[t, f]).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from qlstm_multimic.core.tensor import QuaternionTensor, pack_components, unpack_components
from qlstm_multimic.models.config import ModelKind, Provenance
from qlstm_multimic.utils.error_handling import ShapeError, shape_mismatch

# One example: real features [T, F] and integer frame labels [T].
Example = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class FeatureSequence:
    """Quaternion feature frames [T, F] with one integer label per frame."""

    frames: QuaternionTensor
    labels: np.ndarray
    provenance: Provenance

    def __post_init__(self) -> None:
        if len(self.frames.shape) != 2:
            raise ShapeError(f"feature frames must be [T, F], got {self.frames.shape}")
        if self.labels.shape != (self.frames.shape[0],):
            raise shape_mismatch("label count", (self.frames.shape[0],), self.labels.shape)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_features(self) -> int:
        return self.frames.shape[1]

    def real_features(self, kind: ModelKind) -> np.ndarray:
        """Real network input.

        The QLSTM always reads the flat block layout [T, 4F]. The real LSTM reads
        the same M1|M2|M3|M4 concatenation for four_mic input and the single plain
        matrix [T, F] for the copied and beamformed provenances.
        """
        if ModelKind(kind) is ModelKind.LSTM and self.provenance is not Provenance.FOUR_MIC:
            return np.array(self.frames.a)
        return self.frames.to_flat()


def input_width(kind: ModelKind, provenance: Provenance, num_features: int) -> int:
    if ModelKind(kind) is ModelKind.LSTM and Provenance(provenance) is not Provenance.FOUR_MIC:
        return num_features
    return 4 * num_features


def _labels_for(frames: int, labels: Optional[np.ndarray]) -> np.ndarray:
    if labels is None:
        return np.zeros(frames, dtype=np.int64)
    return np.asarray(labels, dtype=np.int64)


def pack_quaternion_features(
    feats: Sequence[np.ndarray],
    labels: Optional[np.ndarray] = None,
    provenance: Provenance = Provenance.FOUR_MIC,
) -> FeatureSequence:
    """Pack four [T, F] matrices into one quaternion feature sequence.

    Raises:
        ShapeError: If there are not four matrices of identical shape
    """
    if len(feats) != 4:
        raise ShapeError(f"quaternion packing needs 4 feature matrices, got {len(feats)}")
    frames = pack_components(*(np.asarray(m, dtype=np.float64) for m in feats))
    return FeatureSequence(frames, _labels_for(frames.shape[0], labels), Provenance(provenance))


def copied_mic_control(
    feat: np.ndarray,
    labels: Optional[np.ndarray] = None,
    provenance: Provenance = Provenance.COPIED_MIC,
) -> FeatureSequence:
    """Replicate one microphone's features into all four components."""
    feat = np.asarray(feat, dtype=np.float64)
    return pack_quaternion_features([feat, feat, feat, feat], labels, provenance)


def unpack_quaternion_features(seq: FeatureSequence) -> tuple[np.ndarray, ...]:
    return unpack_components(seq.frames)
