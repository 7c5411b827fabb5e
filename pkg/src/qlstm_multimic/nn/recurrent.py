"""Quaternion LSTM, real LSTM baseline and bidirectional stacks.

Two implementations of the QLSTM step live here:

* `qlstm_cell_step` works on numpy QuaternionTensors through core.tensor and
  is the straight-line reference;
* `QLSTMCell` is the float64 torch module used for training and gradients.

Network tensors are time-major [T, B, features]. Quaternion features use the
flat block layout [a | b | c | d], so a split activation is a plain elementwise
activation and bidirectional outputs are concatenated plane by plane.
"""

import logging
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
import torch
from torch import nn

from qlstm_multimic.core.tensor import (
    PLANES,
    QuaternionTensor,
    componentwise_product,
    hamilton_product,
    qmat_vec,
)
from qlstm_multimic.models.config import GateProductMode, ModelKind, NetworkConfig
from qlstm_multimic.nn.init import glorot_uniform
from qlstm_multimic.nn.layers import QLinearParams, QuaternionLinear, SplitActivationKind, split_activation
from qlstm_multimic.nn.params import parameter_count
from qlstm_multimic.utils.error_handling import (
    DomainError,
    NumericalError,
    ShapeError,
    shape_mismatch,
)
from qlstm_multimic.utils.seeding import child_seeds

logger = logging.getLogger(__name__)

GATES = ("f", "i", "c", "o")


# ---------------------------------------------------------------------------
# numpy reference path


@dataclass(frozen=True)
class QLSTMParams:
    """The eight quaternion weight matrices and four biases of one QLSTM cell."""

    w_fh: QuaternionTensor
    w_fx: QuaternionTensor
    w_ih: QuaternionTensor
    w_ix: QuaternionTensor
    w_ch: QuaternionTensor
    w_cx: QuaternionTensor
    w_oh: QuaternionTensor
    w_ox: QuaternionTensor
    b_f: QuaternionTensor
    b_i: QuaternionTensor
    b_c: QuaternionTensor
    b_o: QuaternionTensor

    def __post_init__(self) -> None:
        hidden = self.w_fh.shape[0]
        n_in = self.w_fx.shape[1]
        for gate in GATES:
            wh = getattr(self, f"w_{gate}h")
            wx = getattr(self, f"w_{gate}x")
            b = getattr(self, f"b_{gate}")
            if wh.shape != (hidden, hidden):
                raise shape_mismatch(f"w_{gate}h", (hidden, hidden), wh.shape)
            if wx.shape != (hidden, n_in):
                raise shape_mismatch(f"w_{gate}x", (hidden, n_in), wx.shape)
            if b.shape != (hidden,):
                raise shape_mismatch(f"b_{gate}", (hidden,), b.shape)

    @property
    def hidden(self) -> int:
        return self.w_fh.shape[0]

    @property
    def n_in(self) -> int:
        return self.w_fx.shape[1]

    @classmethod
    def zeros(cls, hidden: int, n_in: int) -> "QLSTMParams":
        values = {}
        for gate in GATES:
            values[f"w_{gate}h"] = QuaternionTensor.zeros((hidden, hidden))
            values[f"w_{gate}x"] = QuaternionTensor.zeros((hidden, n_in))
            values[f"b_{gate}"] = QuaternionTensor.zeros((hidden,))
        return cls(**values)

    def replace(self, **changes: QuaternionTensor) -> "QLSTMParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return QLSTMParams(**values)


@parameter_count.register
def _(p: QLSTMParams) -> int:
    return sum(parameter_count(getattr(p, f.name)) for f in fields(p))


@dataclass(frozen=True)
class QLSTMState:
    """Hidden and cell state of a QLSTM cell, each a quaternion vector [H]."""

    h: QuaternionTensor
    c: QuaternionTensor

    @classmethod
    def zeros(cls, hidden: int) -> "QLSTMState":
        return cls(QuaternionTensor.zeros((hidden,)), QuaternionTensor.zeros((hidden,)))

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in (*self.h.components, *self.c.components))


def qlstm_cell_step(
    p: QLSTMParams,
    x_t: QuaternionTensor,
    s: QLSTMState,
    mode: GateProductMode = GateProductMode.COMPONENTWISE,
    check_finite: bool = False,
) -> QLSTMState:
    """One QLSTM time step.

    f = σ(W_fh ⊛ h + W_fx ⊛ x + b_f), likewise i and o; C̃ = tanh(W_Ch ⊛ h + W_Cx ⊛ x + b_C);
    C = g(f, C_prev) + g(i, C̃); h = g(o, tanh(C)), with g the gate product of `mode`.

    Raises:
        ShapeError: If x_t or the state do not match the parameters
        NumericalError: If check_finite is set and the new state is not finite
    """
    if len(x_t.shape) == 0 or x_t.shape[-1] != p.n_in:
        raise shape_mismatch("qlstm input extent", p.n_in, x_t.shape[-1] if x_t.shape else x_t.shape)
    if s.h.shape[-1] != p.hidden or s.c.shape[-1] != p.hidden:
        raise shape_mismatch("qlstm state extent", p.hidden, (s.h.shape, s.c.shape))

    def preact(gate: str) -> QuaternionTensor:
        return (
            qmat_vec(getattr(p, f"w_{gate}h"), s.h)
            + qmat_vec(getattr(p, f"w_{gate}x"), x_t)
            + getattr(p, f"b_{gate}")
        )

    sigmoid, tanh = SplitActivationKind.SIGMOID, SplitActivationKind.TANH
    f = split_activation(sigmoid, preact("f"))
    i = split_activation(sigmoid, preact("i"))
    candidate = split_activation(tanh, preact("c"))
    o = split_activation(sigmoid, preact("o"))

    gate = hamilton_product if GateProductMode(mode) is GateProductMode.HAMILTON else componentwise_product
    c = gate(f, s.c) + gate(i, candidate)
    h = gate(o, split_activation(tanh, c))
    state = QLSTMState(h, c)
    if check_finite and not state.is_finite():
        raise NumericalError("non-finite QLSTM state")
    return state


# ---------------------------------------------------------------------------
# torch helpers on flat block layout


def quaternion_planes(x: torch.Tensor) -> tuple[torch.Tensor, ...]:
    if x.shape[-1] % 4 != 0:
        raise ShapeError(f"quaternion features need a width divisible by 4, got {x.shape[-1]}")
    return x.chunk(4, dim=-1)


def hamilton_flat(p: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
    """Elementwise Hamilton product of two flat block-layout tensors."""
    a1, b1, c1, d1 = quaternion_planes(p)
    a2, b2, c2, d2 = quaternion_planes(q)
    return torch.cat(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        dim=-1,
    )


def quaternion_cat(parts: list[torch.Tensor]) -> torch.Tensor:
    """Concatenate quaternion feature tensors plane by plane."""
    planes = [quaternion_planes(t) for t in parts]
    return torch.cat([torch.cat([p[k] for p in planes], dim=-1) for k in range(4)], dim=-1)


def reverse_padded(x: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
    """Reverse each sequence of a [T, B, F] batch within its own length.

    Padding frames stay in place, so applying this twice is the identity.
    """
    steps = torch.arange(x.shape[0], device=x.device).unsqueeze(1)
    ends = lengths.to(x.device).unsqueeze(0)
    index = torch.where(steps < ends, ends - 1 - steps, steps)
    return x.gather(0, index.unsqueeze(-1).expand_as(x))


def grouped_dropout(
    x: torch.Tensor,
    rate: float,
    training: bool,
    generator: Optional[torch.Generator] = None,
    groups: int = 1,
) -> torch.Tensor:
    """Inverted dropout whose mask is shared by `groups` blocks of the last axis.

    With groups=4 on flat block layout each quaternion is kept or zeroed as a
    whole.

    Raises:
        DomainError: If rate is outside [0, 1)
    """
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if x.shape[-1] % groups != 0:
        raise ShapeError(f"width {x.shape[-1]} is not divisible into {groups} groups")
    units = x.shape[-1] // groups
    keep = torch.rand(*x.shape[:-1], units, generator=generator, dtype=x.dtype) >= rate
    mask = torch.cat([keep.to(x.dtype)] * groups, dim=-1)
    return x * mask / (1.0 - rate)


def quaternion_dropout(
    x: torch.Tensor, rate: float, training: bool, generator: Optional[torch.Generator] = None
) -> torch.Tensor:
    """Zero whole quaternions (all four components jointly) with probability `rate`."""
    return grouped_dropout(x, rate, training, generator, groups=4)


# ---------------------------------------------------------------------------
# cells


class RecurrentCell(nn.Module):
    """Shared scan logic for LSTM-style cells.

    Subclasses provide `project` (input-side preactivations of the four gates,
    biases included) and `recur` (one step given those projections).
    """

    hidden_width: int

    def __init__(self, check_finite: bool = False):
        super().__init__()
        self.check_finite = check_finite

    def project(self, x: torch.Tensor) -> tuple[torch.Tensor, ...]:
        raise NotImplementedError

    def recur(
        self, projected: tuple[torch.Tensor, ...], state: tuple[torch.Tensor, torch.Tensor]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        raise NotImplementedError

    def zero_state(self, batch: int) -> tuple[torch.Tensor, torch.Tensor]:
        zeros = torch.zeros(batch, self.hidden_width, dtype=torch.float64)
        return zeros, zeros.clone()

    def step(
        self, x_t: torch.Tensor, state: tuple[torch.Tensor, torch.Tensor]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return self.recur(self.project(x_t), state)

    def scan(self, x: torch.Tensor) -> torch.Tensor:
        """Hidden sequence [T, B, W] from zero initial state."""
        projected = self.project(x)
        state = self.zero_state(x.shape[1])
        outputs = []
        for t in range(x.shape[0]):
            state = self.recur(tuple(p[t] for p in projected), state)
            outputs.append(state[0])
        return torch.stack(outputs)

    def _guard(self, c: torch.Tensor) -> None:
        if self.check_finite and not torch.isfinite(c).all():
            logger.debug("non-finite cell state in %s", type(self).__name__)
            raise NumericalError(f"non-finite cell state in {type(self).__name__}")


class QLSTMCell(RecurrentCell):
    """Quaternion LSTM cell on flat block layout; hidden width is 4·H reals."""

    def __init__(
        self,
        n_in: int,
        hidden: int,
        seed: int = 0,
        mode: GateProductMode = GateProductMode.COMPONENTWISE,
        check_finite: bool = False,
    ):
        super().__init__(check_finite)
        self.n_in = n_in
        self.hidden = hidden
        self.hidden_width = 4 * hidden
        self.mode = GateProductMode(mode)
        seeds = child_seeds(seed, 2 * len(GATES))
        for k, gate in enumerate(GATES):
            self.add_module(f"{gate}x", QuaternionLinear(n_in, hidden, bias=True, seed=seeds[2 * k]))
            self.add_module(f"{gate}h", QuaternionLinear(hidden, hidden, bias=False, seed=seeds[2 * k + 1]))

    def _gate_product(self, p: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
        if self.mode is GateProductMode.HAMILTON:
            return hamilton_flat(p, q)
        return p * q

    def project(self, x: torch.Tensor) -> tuple[torch.Tensor, ...]:
        if x.shape[-1] != 4 * self.n_in:
            raise shape_mismatch("qlstm input width", 4 * self.n_in, x.shape[-1])
        return tuple(getattr(self, f"{gate}x")(x) for gate in GATES)

    def recur(self, projected, state):
        h_prev, c_prev = state
        pf, pi, pc, po = projected
        f = torch.sigmoid(pf + self.fh(h_prev))
        i = torch.sigmoid(pi + self.ih(h_prev))
        candidate = torch.tanh(pc + self.ch(h_prev))
        o = torch.sigmoid(po + self.oh(h_prev))
        c = self._gate_product(f, c_prev) + self._gate_product(i, candidate)
        h = self._gate_product(o, torch.tanh(c))
        self._guard(c)
        return h, c

    def to_params(self) -> QLSTMParams:
        values = {}
        for gate in GATES:
            x_side = getattr(self, f"{gate}x").to_params()
            values[f"w_{gate}x"] = x_side.weights
            values[f"b_{gate}"] = x_side.bias
            values[f"w_{gate}h"] = getattr(self, f"{gate}h").to_params().weights
        return QLSTMParams(**values)

    def load_params(self, p: QLSTMParams) -> None:
        for gate in GATES:
            getattr(self, f"{gate}x").load_params(
                QLinearParams(getattr(p, f"w_{gate}x"), getattr(p, f"b_{gate}"))
            )
            getattr(self, f"{gate}h").load_params(QLinearParams(getattr(p, f"w_{gate}h")))


def _real_linear(n_in: int, n_out: int, bias: bool, rng: np.random.Generator) -> nn.Linear:
    layer = nn.Linear(n_in, n_out, bias=bias, dtype=torch.float64)
    with torch.no_grad():
        layer.weight.copy_(torch.from_numpy(glorot_uniform(rng, n_out, n_in)))
        if bias:
            layer.bias.zero_()
    return layer


class RealLSTMCell(RecurrentCell):
    """Textbook LSTM cell with the same gate layout as QLSTMCell."""

    def __init__(self, n_in: int, hidden: int, seed: int = 0, check_finite: bool = False):
        super().__init__(check_finite)
        self.n_in = n_in
        self.hidden = hidden
        self.hidden_width = hidden
        rng = np.random.default_rng(seed)
        for gate in GATES:
            self.add_module(f"{gate}x", _real_linear(n_in, hidden, True, rng))
            self.add_module(f"{gate}h", _real_linear(hidden, hidden, False, rng))

    def project(self, x: torch.Tensor) -> tuple[torch.Tensor, ...]:
        if x.shape[-1] != self.n_in:
            raise shape_mismatch("lstm input width", self.n_in, x.shape[-1])
        return tuple(getattr(self, f"{gate}x")(x) for gate in GATES)

    def recur(self, projected, state):
        h_prev, c_prev = state
        pf, pi, pc, po = projected
        f = torch.sigmoid(pf + self.fh(h_prev))
        i = torch.sigmoid(pi + self.ih(h_prev))
        candidate = torch.tanh(pc + self.ch(h_prev))
        o = torch.sigmoid(po + self.oh(h_prev))
        c = f * c_prev + i * candidate
        h = o * torch.tanh(c)
        self._guard(c)
        return h, c


# ---------------------------------------------------------------------------
# stacks


class SequenceClassifier(nn.Module):
    """Stack of (bi)directional recurrent layers with a real linear head.

    Each layer's backward direction scans every sequence from its own last
    valid frame with a fresh zero state. Dropout sits between layers only and
    draws from the network's own generator.
    """

    kind: ModelKind

    def __init__(self, cfg: NetworkConfig, input_dim: int, seed: int = 0, check_finite: bool = False):
        super().__init__()
        self.cfg = cfg
        self.input_dim = input_dim
        self.check_finite = check_finite
        seeds = child_seeds(seed, cfg.num_layers * 2 + 2)

        self.layers = nn.ModuleList()
        width = input_dim
        for layer in range(cfg.num_layers):
            cells = nn.ModuleDict({"fwd": self._make_cell(width, seeds[2 * layer])})
            if cfg.bidirectional:
                cells["bwd"] = self._make_cell(width, seeds[2 * layer + 1])
            self.layers.append(cells)
            width = cfg.directions * cells["fwd"].hidden_width
        self.feature_width = width
        self.head = _real_linear(width, cfg.num_classes, True, np.random.default_rng(seeds[-2]))
        self.dropout_generator = torch.Generator().manual_seed(seeds[-1])

    def _make_cell(self, input_width: int, seed: int) -> RecurrentCell:
        raise NotImplementedError

    def _concat_directions(self, fwd: torch.Tensor, bwd: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def _dropout(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def hidden_sequence(self, x: torch.Tensor, lengths: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Top-layer features [T, B, feature_width] fed to the head."""
        if x.dim() != 3:
            raise ShapeError(f"expected a [T, B, F] batch, got shape {tuple(x.shape)}")
        if x.shape[0] == 0:
            raise ShapeError("empty sequence")
        if x.shape[-1] != self.input_dim:
            raise shape_mismatch("network input width", self.input_dim, x.shape[-1])
        if lengths is None:
            lengths = torch.full((x.shape[1],), x.shape[0], dtype=torch.long)

        for index, cells in enumerate(self.layers):
            if index > 0:
                x = self._dropout(x)
            fwd = cells["fwd"].scan(x)
            if self.cfg.bidirectional:
                bwd = reverse_padded(cells["bwd"].scan(reverse_padded(x, lengths)), lengths)
                x = self._concat_directions(fwd, bwd)
            else:
                x = fwd
        return x

    def forward(self, x: torch.Tensor, lengths: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Class logits [T, B, num_classes]."""
        return self.head(self.hidden_sequence(x, lengths))


class QLSTMNetwork(SequenceClassifier):
    """Quaternion LSTM stack; input width is 4 x (input quaternions)."""

    kind = ModelKind.QLSTM

    def __init__(self, cfg: NetworkConfig, input_dim: int, seed: int = 0, check_finite: bool = False):
        if input_dim % 4 != 0:
            raise ShapeError(f"QLSTM input width must be a multiple of 4, got {input_dim}")
        super().__init__(cfg, input_dim, seed, check_finite)

    def _make_cell(self, input_width: int, seed: int) -> RecurrentCell:
        return QLSTMCell(
            input_width // 4,
            self.cfg.hidden,
            seed=seed,
            mode=self.cfg.gate_product_mode,
            check_finite=self.check_finite,
        )

    def _concat_directions(self, fwd, bwd):
        return quaternion_cat([fwd, bwd])

    def _dropout(self, x):
        return quaternion_dropout(x, self.cfg.dropout_rate, self.training, self.dropout_generator)


class RealLSTMNetwork(SequenceClassifier):
    """Real-valued LSTM stack."""

    kind = ModelKind.LSTM

    def _make_cell(self, input_width: int, seed: int) -> RecurrentCell:
        return RealLSTMCell(input_width, self.cfg.hidden, seed=seed, check_finite=self.check_finite)

    def _concat_directions(self, fwd, bwd):
        return torch.cat([fwd, bwd], dim=-1)

    def _dropout(self, x):
        return grouped_dropout(x, self.cfg.dropout_rate, self.training, self.dropout_generator)


def build_model(
    kind: ModelKind, cfg: NetworkConfig, input_dim: int, seed: int = 0, check_finite: bool = False
) -> SequenceClassifier:
    """Construct a network of the requested family."""
    if ModelKind(kind) is ModelKind.QLSTM:
        return QLSTMNetwork(cfg, input_dim, seed, check_finite)
    return RealLSTMNetwork(cfg, input_dim, seed, check_finite)


def _single_sequence(model: SequenceClassifier, x: np.ndarray, training: bool) -> np.ndarray:
    model.train(training)
    with torch.no_grad():
        logits = model(torch.from_numpy(np.ascontiguousarray(x, dtype=np.float64)).unsqueeze(1))
    return logits[:, 0, :].numpy()


def qlstm_sequence_forward(
    model: QLSTMNetwork, x: QuaternionTensor, training: bool = False
) -> np.ndarray:
    """Logits [T, num_classes] of one quaternion sequence x [T, I]."""
    if len(x.shape) != 2:
        raise ShapeError(f"expected a quaternion sequence [T, I], got {x.shape}")
    return _single_sequence(model, x.to_flat(), training)


def real_lstm_forward(model: RealLSTMNetwork, x: np.ndarray, training: bool = False) -> np.ndarray:
    """Logits [T, num_classes] of one real sequence x [T, I_real]."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"expected a real sequence [T, I], got {x.shape}")
    return _single_sequence(model, x, training)


def network_arrays(model: nn.Module) -> dict[str, np.ndarray]:
    """Parameters as named numpy arrays, in registration order (planes a, b, c, d)."""
    return {name: p.detach().cpu().numpy().copy() for name, p in model.named_parameters()}


@torch.no_grad()
def load_network_arrays(model: nn.Module, arrays: dict[str, np.ndarray]) -> None:
    params = dict(model.named_parameters())
    missing = sorted(set(params) - set(arrays))
    if missing:
        raise ShapeError(f"missing parameter arrays: {', '.join(missing[:5])}")
    for name, p in params.items():
        value = arrays[name]
        if tuple(value.shape) != tuple(p.shape):
            raise shape_mismatch(f"parameter {name}", tuple(p.shape), tuple(value.shape))
        p.copy_(torch.from_numpy(np.array(value, dtype=np.float64)))


__all__ = [
    "PLANES",
    "QLSTMCell",
    "QLSTMNetwork",
    "QLSTMParams",
    "QLSTMState",
    "RealLSTMCell",
    "RealLSTMNetwork",
    "SequenceClassifier",
    "build_model",
    "grouped_dropout",
    "hamilton_flat",
    "qlstm_cell_step",
    "qlstm_sequence_forward",
    "quaternion_cat",
    "quaternion_dropout",
    "real_lstm_forward",
    "reverse_padded",
]
