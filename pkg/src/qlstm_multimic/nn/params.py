"""Real-parameter counting for layers, cells and whole networks."""

from functools import singledispatch

import numpy as np
from torch import nn

from qlstm_multimic.core.tensor import QuaternionTensor
from qlstm_multimic.models.config import NetworkConfig
from qlstm_multimic.nn.layers import QLinearParams


@singledispatch
def parameter_count(p: object) -> int:
    """Total number of real scalars held by a parameter container."""
    raise TypeError(f"cannot count parameters of {type(p).__name__}")


@parameter_count.register
def _(p: np.ndarray) -> int:
    return int(p.size)


@parameter_count.register
def _(p: QuaternionTensor) -> int:
    return 4 * p.size


@parameter_count.register
def _(p: QLinearParams) -> int:
    count = parameter_count(p.weights)
    if p.bias is not None:
        count += parameter_count(p.bias)
    return count


@parameter_count.register
def _(p: nn.Module) -> int:
    return sum(param.numel() for param in p.parameters())


@parameter_count.register
def _(p: dict) -> int:
    return sum(parameter_count(v) for v in p.values())


def qlstm_parameter_count(cfg: NetworkConfig, input_quaternions: int) -> int:
    """Closed-form count of a QLSTM stack plus its real output head.

    Per direction and layer: four gates, each with an [H, H] and an [H, I]
    quaternion matrix and an [H] quaternion bias.
    """
    h, dirs = cfg.hidden, cfg.directions
    total, width = 0, input_quaternions
    for _ in range(cfg.num_layers):
        total += dirs * 4 * 4 * (h * h + h * width + h)
        width = dirs * h
    return total + (4 * width) * cfg.num_classes + cfg.num_classes


def lstm_parameter_count(cfg: NetworkConfig, input_dim: int) -> int:
    """Closed-form count of a real LSTM stack plus its output head.

    Per direction and layer: 4·(N·N + N·I + N).
    """
    n, dirs = cfg.hidden, cfg.directions
    total, width = 0, input_dim
    for _ in range(cfg.num_layers):
        total += dirs * 4 * (n * n + n * width + n)
        width = dirs * n
    return total + width * cfg.num_classes + cfg.num_classes


def parity_hidden_size(target: int, input_dim: int, cfg: NetworkConfig) -> int:
    """Real LSTM hidden size whose exact count is closest to `target`.

    Ties resolve to the smaller size.
    """
    best_n, best_gap = 1, abs(lstm_parameter_count(cfg.model_copy(update={"hidden": 1}), input_dim) - target)
    n = 1
    while True:
        n += 1
        count = lstm_parameter_count(cfg.model_copy(update={"hidden": n}), input_dim)
        gap = abs(count - target)
        if gap < best_gap:
            best_n, best_gap = n, gap
        if count > target:
            return best_n
