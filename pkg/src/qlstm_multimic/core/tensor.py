"""Batched quaternion arrays stored as four component planes.

A QuaternionTensor keeps one float64 array per component (a, b, c, d), all of
the same shape. Two real layouts are used elsewhere in the package:

* flat block layout: trailing extent n becomes 4n ordered
  [a-block | b-block | c-block | d-block]; this is what the networks consume.
* interleaved layout: trailing extent n becomes 4n ordered
  (a0, b0, c0, d0, a1, ...); this pairs with `to_real_matrix`, the real
  block expansion of a quaternion matrix.
"""

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from qlstm_multimic.core.quaternion import Quaternion
from qlstm_multimic.utils.error_handling import ShapeError, shape_mismatch

PLANES = ("a", "b", "c", "d")


def _frozen_plane(values: np.ndarray) -> np.ndarray:
    plane = np.array(values, dtype=np.float64, copy=True)
    plane.setflags(write=False)
    return plane


@dataclass(frozen=True)
class QuaternionTensor:
    """Structure-of-arrays quaternion tensor."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        planes = [np.asarray(getattr(self, name)) for name in PLANES]
        shapes = {p.shape for p in planes}
        if len(shapes) != 1:
            raise ShapeError(
                "component planes differ in shape: "
                + ", ".join(f"{n}={p.shape}" for n, p in zip(PLANES, planes))
            )
        for name, plane in zip(PLANES, planes):
            object.__setattr__(self, name, _frozen_plane(plane))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.a.shape

    @property
    def size(self) -> int:
        return int(self.a.size)

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.a, self.b, self.c, self.d)

    @classmethod
    def zeros(cls, shape: Iterable[int]) -> "QuaternionTensor":
        shape = tuple(shape)
        return cls(*(np.zeros(shape) for _ in PLANES))

    @classmethod
    def from_quaternions(cls, values: list[Quaternion]) -> "QuaternionTensor":
        """1-D tensor from a list of scalar quaternions."""
        rows = np.array([q.as_tuple() for q in values], dtype=np.float64).reshape(-1, 4)
        return cls(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3])

    @classmethod
    def from_flat(cls, flat: np.ndarray) -> "QuaternionTensor":
        """Split a flat block-layout real array into planes."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.ndim == 0 or flat.shape[-1] % 4 != 0:
            raise ShapeError(f"flat quaternion layout needs a trailing extent divisible by 4, got {flat.shape}")
        return cls(*np.split(flat, 4, axis=-1))

    def to_flat(self) -> np.ndarray:
        return np.concatenate(self.components, axis=-1)

    def stack(self) -> np.ndarray:
        """Array of shape [4, *shape]."""
        return np.stack(self.components, axis=0)

    def item(self, *index: int) -> Quaternion:
        return Quaternion(*(float(p[index]) for p in self.components))

    def map_planes(self, fn: Callable[[np.ndarray], np.ndarray]) -> "QuaternionTensor":
        return QuaternionTensor(*(fn(p) for p in self.components))

    def conj(self) -> "QuaternionTensor":
        return QuaternionTensor(self.a, -self.b, -self.c, -self.d)

    def norm(self) -> np.ndarray:
        return np.sqrt(self.a**2 + self.b**2 + self.c**2 + self.d**2)

    def __add__(self, other: "QuaternionTensor") -> "QuaternionTensor":
        return QuaternionTensor(*(x + y for x, y in zip(self.components, other.components)))


def pack_components(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray
) -> QuaternionTensor:
    """Pack four same-shape real arrays into a QuaternionTensor.

    Raises:
        ShapeError: If the planes differ in shape
    """
    return QuaternionTensor(a, b, c, d)


def unpack_components(t: QuaternionTensor) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of pack_components."""
    return t.components


def hamilton_product(x: QuaternionTensor, y: QuaternionTensor) -> QuaternionTensor:
    """Elementwise Hamilton product with numpy broadcasting."""
    a1, b1, c1, d1 = x.components
    a2, b2, c2, d2 = y.components
    return QuaternionTensor(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


def componentwise_product(x: QuaternionTensor, y: QuaternionTensor) -> QuaternionTensor:
    """Plane-by-plane product (a1a2, b1b2, c1c2, d1d2)."""
    return QuaternionTensor(*(p * q for p, q in zip(x.components, y.components)))


def hamilton_kernel(w: QuaternionTensor) -> np.ndarray:
    """Real [4·n_in, 4·n_out] kernel K such that flat(x) @ K = flat(W ⊛ x).

    Rows are grouped by input plane and columns by output plane, both in
    block layout.
    """
    if len(w.shape) != 2:
        raise ShapeError(f"quaternion weight must be 2-D [n_out, n_in], got {w.shape}")
    a, b, c, d = (p.T for p in w.components)
    return np.block(
        [
            [a, b, c, d],
            [-b, a, d, -c],
            [-c, -d, a, b],
            [-d, c, -b, a],
        ]
    )


def qmat_vec(w: QuaternionTensor, x: QuaternionTensor) -> QuaternionTensor:
    """Quaternion matrix-vector product out[o] = Σ_i W[o, i] ⊗ x[i].

    Leading extents of x are treated as batch dimensions.

    Raises:
        ShapeError: If W is not 2-D or the inner extents differ
    """
    if len(w.shape) != 2:
        raise ShapeError(f"quaternion weight must be 2-D [n_out, n_in], got {w.shape}")
    n_in = w.shape[1]
    if len(x.shape) == 0 or x.shape[-1] != n_in:
        raise shape_mismatch("qmat_vec inner extent", n_in, x.shape[-1] if x.shape else x.shape)
    return QuaternionTensor.from_flat(x.to_flat() @ hamilton_kernel(w))


def to_real_matrix(w: QuaternionTensor) -> np.ndarray:
    """Expand an [n_out, n_in] quaternion matrix into its [4n_out, 4n_in] real form.

    Block (o, i) is the 4x4 Hamilton matrix of W[o, i]; pair with `interleave`.
    """
    if len(w.shape) != 2:
        raise ShapeError(f"quaternion weight must be 2-D [n_out, n_in], got {w.shape}")
    a, b, c, d = w.components
    blocks = np.stack(
        [
            np.stack([a, -b, -c, -d], axis=-1),
            np.stack([b, a, -d, c], axis=-1),
            np.stack([c, d, a, -b], axis=-1),
            np.stack([d, -c, b, a], axis=-1),
        ],
        axis=-2,
    )  # [n_out, n_in, 4, 4]
    n_out, n_in = w.shape
    return blocks.transpose(0, 2, 1, 3).reshape(4 * n_out, 4 * n_in)


def interleave(x: QuaternionTensor) -> np.ndarray:
    """Interleaved real view (a0, b0, c0, d0, a1, ...) along the last axis."""
    stacked = np.stack(x.components, axis=-1)
    return stacked.reshape(*x.shape[:-1], 4 * x.shape[-1])


def deinterleave(values: np.ndarray) -> QuaternionTensor:
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] % 4 != 0:
        raise ShapeError(f"interleaved layout needs a trailing extent divisible by 4, got {values.shape}")
    grouped = values.reshape(*values.shape[:-1], values.shape[-1] // 4, 4)
    return QuaternionTensor(*(grouped[..., k] for k in range(4)))
