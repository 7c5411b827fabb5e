"""Parameter initialization.

Quaternion weights are sampled in polar form,

    w = |w| · (cos θ + u · sin θ),  θ ~ U(-π, π),  u uniform on the unit 2-sphere,

with |w| ~ Rayleigh(s). Since E[a²] + E[b²] + E[c²] + E[d²] = E[|w|²] = 2s², the
variance pooled over the four components is s²/2; choosing s = σ·√2 makes that
pooled per-component variance equal to the criterion's σ². Fans are counted in
quaternion units.
"""

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from qlstm_multimic.core.tensor import QuaternionTensor
from qlstm_multimic.utils.error_handling import DomainError, shape_mismatch


class InitSpec(BaseModel):
    """Initialization criterion for one quaternion weight matrix."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    criterion: Literal["glorot", "he"] = "glorot"
    seed: int = Field(0, ge=0)
    fan_in: int = Field(..., gt=0, description="Input extent in quaternion units")
    fan_out: int = Field(..., gt=0, description="Output extent in quaternion units")

    @property
    def sigma(self) -> float:
        if self.criterion == "glorot":
            return 1.0 / math.sqrt(2.0 * (self.fan_in + self.fan_out))
        return 1.0 / math.sqrt(2.0 * self.fan_in)

    @classmethod
    def for_shape(cls, n_out: int, n_in: int, seed: int, criterion: str = "glorot") -> "InitSpec":
        return cls(criterion=criterion, seed=seed, fan_in=n_in, fan_out=n_out)


def polar_quaternion_weights(spec: InitSpec, shape: tuple[int, int]) -> QuaternionTensor:
    """Draw an [n_out, n_in] quaternion matrix in polar form."""
    n_out, n_in = shape
    if n_out <= 0 or n_in <= 0:
        raise DomainError(f"quaternion weight dims must be positive, got {shape}")
    if (spec.fan_out, spec.fan_in) != (n_out, n_in):
        raise shape_mismatch("init fan (out, in)", (n_out, n_in), (spec.fan_out, spec.fan_in))

    rng = np.random.default_rng(spec.seed)
    modulus = rng.rayleigh(scale=spec.sigma * math.sqrt(2.0), size=shape)
    phase = rng.uniform(-math.pi, math.pi, size=shape)
    axis = rng.standard_normal(size=(*shape, 3))
    length = np.linalg.norm(axis, axis=-1, keepdims=True)
    axis = np.where(length > 0.0, axis / np.where(length > 0.0, length, 1.0), [1.0, 0.0, 0.0])

    spin = modulus * np.sin(phase)
    return QuaternionTensor(
        modulus * np.cos(phase),
        spin * axis[..., 0],
        spin * axis[..., 1],
        spin * axis[..., 2],
    )


def glorot_uniform(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    """Real [n_out, n_in] matrix from U(-l, l), l = sqrt(6 / (n_in + n_out))."""
    limit = math.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))
