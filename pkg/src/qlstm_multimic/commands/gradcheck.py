"""gradcheck: finite-difference verification of BPTT on tiny networks."""

import logging
from typing import Callable, Optional

import numpy as np

from qlstm_multimic.models.config import ModelKind, NetworkConfig
from qlstm_multimic.models.results import GradCheckReport
from qlstm_multimic.nn.recurrent import SequenceClassifier, build_model
from qlstm_multimic.training.batching import SequenceBatch, collate
from qlstm_multimic.training.gradients import GradientSet, grad_check
from qlstm_multimic.utils.error_handling import ConfigValidationError

logger = logging.getLogger(__name__)

TINY_INPUT_QUATERNIONS = 2
TINY_HIDDEN = 3
TINY_STEPS = 5
TINY_CLASSES = 3

PRESETS = {"tiny-qlstm": ModelKind.QLSTM, "tiny-lstm": ModelKind.LSTM}


def tiny_network_config() -> NetworkConfig:
    return NetworkConfig(
        num_layers=2,
        hidden=TINY_HIDDEN,
        bidirectional=True,
        dropout_rate=0.0,
        num_classes=TINY_CLASSES,
    )


def tiny_factory(kind: ModelKind) -> Callable[[int], tuple[SequenceClassifier, SequenceBatch]]:
    """Factory of (network, one-sequence batch) for the tiny presets.

    Both presets read the same 8 real input features (2 quaternions).
    """
    input_dim = 4 * TINY_INPUT_QUATERNIONS

    def factory(seed: int) -> tuple[SequenceClassifier, SequenceBatch]:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((TINY_STEPS, input_dim))
        y = rng.integers(0, TINY_CLASSES, TINY_STEPS)
        model = build_model(kind, tiny_network_config(), input_dim, seed=seed)
        return model, collate([(x, y)])

    return factory


def double_entry(param: str) -> Callable[[GradientSet], GradientSet]:
    """Fault injector: doubles the largest-magnitude entry of one gradient array."""

    def perturb(grads: GradientSet) -> GradientSet:
        if param not in grads.grads:
            raise ConfigValidationError(f"no parameter named {param!r}; have {', '.join(grads.names())}")
        corrupted = dict(grads.grads)
        g = corrupted[param].copy()
        flat = g.reshape(-1)
        flat[np.argmax(np.abs(flat))] *= 2.0
        corrupted[param] = g
        return GradientSet(corrupted)

    return perturb


def cmd_gradcheck(
    preset: str = "tiny-qlstm",
    seed: int = 0,
    tolerance: float = 1e-4,
    step: float = 1e-5,
    inject_fault: Optional[str] = None,
) -> GradCheckReport:
    """Run grad_check on a preset; `inject_fault` names a gradient array to corrupt."""
    if preset not in PRESETS:
        raise ConfigValidationError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    perturb = double_entry(inject_fault) if inject_fault else None
    return grad_check(tiny_factory(PRESETS[preset]), tolerance=tolerance, step=step, seed=seed, perturb=perturb)
