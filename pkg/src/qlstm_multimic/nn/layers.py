"""Quaternion dense layers and split activations.

`QLinearParams` and `qlinear_forward` are the numpy reference path built on
core.tensor; `QuaternionLinear` is the float64 torch module used for training.
Both compute W ⊛ x + b with Hamilton products. The torch module builds the
real block kernel once per call, so one real matmul does the whole
quaternion product.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
import torch
from scipy.special import expit
from torch import nn

from qlstm_multimic.core.tensor import PLANES, QuaternionTensor, qmat_vec
from qlstm_multimic.nn.init import InitSpec, polar_quaternion_weights
from qlstm_multimic.utils.error_handling import ShapeError, shape_mismatch


class SplitActivationKind(str, Enum):
    """Real activation applied independently to each quaternion component."""

    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"


_NUMPY_ACTIVATIONS: dict[SplitActivationKind, Callable[[np.ndarray], np.ndarray]] = {
    SplitActivationKind.SIGMOID: expit,
    SplitActivationKind.TANH: np.tanh,
    SplitActivationKind.RELU: lambda x: np.maximum(x, 0.0),
}


def split_activation(kind: SplitActivationKind, q: QuaternionTensor) -> QuaternionTensor:
    """α(Q) = α(a) + α(b)i + α(c)j + α(d)k."""
    return q.map_planes(_NUMPY_ACTIVATIONS[SplitActivationKind(kind)])


@dataclass(frozen=True)
class QLinearParams:
    """Weights [n_out, n_in] and optional bias [n_out] of a quaternion dense layer."""

    weights: QuaternionTensor
    bias: Optional[QuaternionTensor] = None

    def __post_init__(self) -> None:
        if len(self.weights.shape) != 2:
            raise ShapeError(f"quaternion weights must be 2-D, got {self.weights.shape}")
        if self.bias is not None and self.bias.shape != (self.n_out,):
            raise shape_mismatch("quaternion bias", (self.n_out,), self.bias.shape)

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    def named_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        """Planes keyed `<prefix>weight_a` ... `<prefix>bias_d`, in a, b, c, d order."""
        arrays = {f"{prefix}weight_{n}": p for n, p in zip(PLANES, self.weights.components)}
        if self.bias is not None:
            arrays.update({f"{prefix}bias_{n}": p for n, p in zip(PLANES, self.bias.components)})
        return arrays

    @classmethod
    def from_named_arrays(cls, arrays: dict[str, np.ndarray], prefix: str = "") -> "QLinearParams":
        weights = QuaternionTensor(*(arrays[f"{prefix}weight_{n}"] for n in PLANES))
        bias = None
        if f"{prefix}bias_a" in arrays:
            bias = QuaternionTensor(*(arrays[f"{prefix}bias_{n}"] for n in PLANES))
        return cls(weights, bias)


def quaternion_init(spec: InitSpec, shape: tuple[int, int], bias: bool = True) -> QLinearParams:
    """Polar-form weights for an [n_out, n_in] layer, zero bias.

    Deterministic for a fixed spec.seed.
    """
    weights = polar_quaternion_weights(spec, shape)
    return QLinearParams(weights, QuaternionTensor.zeros((shape[0],)) if bias else None)


def qlinear_forward(p: QLinearParams, x: QuaternionTensor) -> QuaternionTensor:
    """W ⊛ x + b on the numpy reference path."""
    if len(x.shape) == 0 or x.shape[-1] != p.n_in:
        raise shape_mismatch("qlinear input extent", p.n_in, x.shape[-1] if x.shape else x.shape)
    out = qmat_vec(p.weights, x)
    return out + p.bias if p.bias is not None else out


def hamilton_kernel_torch(wa: torch.Tensor, wb: torch.Tensor, wc: torch.Tensor, wd: torch.Tensor) -> torch.Tensor:
    """Real [4·n_in, 4·n_out] kernel; rows by input plane, columns by output plane."""
    a, b, c, d = wa.t(), wb.t(), wc.t(), wd.t()
    return torch.cat(
        [
            torch.cat([a, b, c, d], dim=1),
            torch.cat([-b, a, d, -c], dim=1),
            torch.cat([-c, -d, a, b], dim=1),
            torch.cat([-d, c, -b, a], dim=1),
        ],
        dim=0,
    )


class QuaternionLinear(nn.Module):
    """Quaternion dense layer on flat block-layout tensors [..., 4·n_in] -> [..., 4·n_out]."""

    def __init__(
        self,
        n_in: int,
        n_out: int,
        bias: bool = True,
        seed: int = 0,
        criterion: str = "glorot",
    ):
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        params = quaternion_init(InitSpec.for_shape(n_out, n_in, seed, criterion), (n_out, n_in), bias)
        for name, plane in zip(PLANES, params.weights.components):
            self.register_parameter(f"weight_{name}", nn.Parameter(torch.from_numpy(plane.copy())))
        for name in PLANES:
            value = nn.Parameter(torch.zeros(n_out, dtype=torch.float64)) if bias else None
            self.register_parameter(f"bias_{name}", value)

    @property
    def has_bias(self) -> bool:
        return self.bias_a is not None

    def kernel(self) -> torch.Tensor:
        return hamilton_kernel_torch(self.weight_a, self.weight_b, self.weight_c, self.weight_d)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = x @ self.kernel()
        if self.has_bias:
            out = out + torch.cat([self.bias_a, self.bias_b, self.bias_c, self.bias_d])
        return out

    def to_params(self) -> QLinearParams:
        def plane(name: str) -> np.ndarray:
            return getattr(self, name).detach().cpu().numpy().copy()

        weights = QuaternionTensor(*(plane(f"weight_{n}") for n in PLANES))
        bias = QuaternionTensor(*(plane(f"bias_{n}") for n in PLANES)) if self.has_bias else None
        return QLinearParams(weights, bias)

    @torch.no_grad()
    def load_params(self, p: QLinearParams) -> None:
        if (p.n_out, p.n_in) != (self.n_out, self.n_in):
            raise shape_mismatch("quaternion layer shape", (self.n_out, self.n_in), (p.n_out, p.n_in))
        if (p.bias is not None) != self.has_bias:
            raise ShapeError("bias presence differs between layer and parameters")
        for name, plane in zip(PLANES, p.weights.components):
            getattr(self, f"weight_{name}").copy_(torch.from_numpy(plane.copy()))
        if p.bias is not None:
            for name, plane in zip(PLANES, p.bias.components):
                getattr(self, f"bias_{name}").copy_(torch.from_numpy(plane.copy()))

    def extra_repr(self) -> str:
        return f"n_in={self.n_in}, n_out={self.n_out}, bias={self.has_bias}"
