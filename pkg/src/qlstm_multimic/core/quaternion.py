"""Scalar quaternion numbers and their algebra.

A quaternion is written a + bi + cj + dk with i² = j² = k² = ijk = -1. The
Hamilton product is implemented twice: as the explicit four-component
expansion (`hamilton`) and as a 4x4 matrix applied to a column vector
(`hamilton_via_matrix`). The two are kept independent so each can serve as
the oracle of the other.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np

from qlstm_multimic.utils.error_handling import DomainError, ShapeError


@dataclass(frozen=True)
class Quaternion:
    """A quaternion a + bi + cj + dk with finite real components."""

    a: float
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            # float subclasses (numpy scalars, instrumented floats) pass through untouched
            if not isinstance(value, float):
                value = float(value)
                object.__setattr__(self, f.name, value)
            if not math.isfinite(value):
                raise DomainError(f"Quaternion component {f.name} is not finite: {value}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return q_add(self, other)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return hamilton(self, other)


ZERO = Quaternion(0.0, 0.0, 0.0, 0.0)
ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
UNIT_I = Quaternion(0.0, 1.0, 0.0, 0.0)
UNIT_J = Quaternion(0.0, 0.0, 1.0, 0.0)
UNIT_K = Quaternion(0.0, 0.0, 0.0, 1.0)


def q_add(x: Quaternion, y: Quaternion) -> Quaternion:
    """Componentwise sum."""
    return Quaternion(x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d)


def q_conj(q: Quaternion) -> Quaternion:
    """Conjugate (a, -b, -c, -d)."""
    return Quaternion(q.a, -q.b, -q.c, -q.d)


def q_norm(q: Quaternion) -> float:
    """Euclidean norm sqrt(a² + b² + c² + d²)."""
    return math.hypot(q.a, q.b, q.c, q.d)


def q_normalize(q: Quaternion) -> Quaternion:
    """Scale q to unit norm.

    Raises:
        DomainError: If q is the zero quaternion
    """
    norm = q_norm(q)
    if norm == 0.0:
        raise DomainError("cannot normalize zero quaternion")
    return Quaternion(q.a / norm, q.b / norm, q.c / norm, q.d / norm)


def hamilton(x: Quaternion, y: Quaternion) -> Quaternion:
    """Hamilton product x ⊗ y.

    Exactly 16 multiplications and 12 additions/subtractions; no other
    arithmetic is allowed in this function (see core.counting).
    """
    a1, b1, c1, d1 = x.a, x.b, x.c, x.d
    a2, b2, c2, d2 = y.a, y.b, y.c, y.d
    return Quaternion(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


@dataclass(frozen=True)
class HamiltonMatrix:
    """Left-multiplication matrix of a quaternion.

    Invariant: every diagonal entry equals the real part a and m + mᵀ = 2a·I.
    """

    m: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.m, dtype=np.float64)
        if m.shape != (4, 4):
            raise ShapeError(f"Hamilton matrix: expected (4, 4), got {m.shape}")
        if not np.array_equal(m + m.T, 2.0 * m[0, 0] * np.eye(4)):
            raise DomainError("matrix does not have the Hamilton sign structure")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def quaternion(self) -> Quaternion:
        """The quaternion this matrix represents (its first column)."""
        return Quaternion(*(float(v) for v in self.m[:, 0]))


def to_hamilton_matrix(q: Quaternion) -> HamiltonMatrix:
    """Matrix representation of q, laid out so that x ⊗ y = M(x) · y."""
    a, b, c, d = (float(v) for v in q.as_tuple())
    return HamiltonMatrix(
        np.array(
            [
                [a, -b, -c, -d],
                [b, a, -d, c],
                [c, d, a, -b],
                [d, -c, b, a],
            ],
            dtype=np.float64,
        )
    )


def hamilton_via_matrix(x: Quaternion, y: Quaternion) -> Quaternion:
    """Hamilton product computed as M(x) applied to y's column vector."""
    product = to_hamilton_matrix(x).m @ y.as_array()
    return Quaternion(*(float(v) for v in product))
