"""Instrumented floats for counting the scalar operations of a kernel."""

from dataclasses import dataclass

from qlstm_multimic.core.quaternion import Quaternion, hamilton


@dataclass
class OperationCount:
    """Tally of basic real operations."""

    mul: int = 0
    add: int = 0
    neg: int = 0
    div: int = 0

    @property
    def total(self) -> int:
        return self.mul + self.add + self.neg + self.div


class CountingFloat(float):
    """A float that records every arithmetic operation into a shared tally.

    Results of arithmetic are CountingFloats bound to the same tally, so a
    whole expression tree is counted once its leaves are instrumented.
    """

    def __new__(cls, value: float, tally: OperationCount) -> "CountingFloat":
        obj = super().__new__(cls, value)
        obj.tally = tally
        return obj

    def _wrap(self, value: float) -> "CountingFloat":
        return CountingFloat(value, self.tally)

    def __mul__(self, other: float) -> "CountingFloat":
        self.tally.mul += 1
        return self._wrap(float(self) * float(other))

    def __rmul__(self, other: float) -> "CountingFloat":
        self.tally.mul += 1
        return self._wrap(float(other) * float(self))

    def __add__(self, other: float) -> "CountingFloat":
        self.tally.add += 1
        return self._wrap(float(self) + float(other))

    def __radd__(self, other: float) -> "CountingFloat":
        self.tally.add += 1
        return self._wrap(float(other) + float(self))

    def __sub__(self, other: float) -> "CountingFloat":
        self.tally.add += 1
        return self._wrap(float(self) - float(other))

    def __rsub__(self, other: float) -> "CountingFloat":
        self.tally.add += 1
        return self._wrap(float(other) - float(self))

    def __neg__(self) -> "CountingFloat":
        self.tally.neg += 1
        return self._wrap(-float(self))

    def __truediv__(self, other: float) -> "CountingFloat":
        self.tally.div += 1
        return self._wrap(float(self) / float(other))


def instrumented(q: Quaternion, tally: OperationCount) -> Quaternion:
    """Copy of q whose components count into `tally`."""
    return Quaternion(*(CountingFloat(float(v), tally) for v in q.as_tuple()))


def count_hamilton_operations(
    x: Quaternion = Quaternion(1.0, 2.0, 3.0, 4.0),
    y: Quaternion = Quaternion(5.0, 6.0, 7.0, 8.0),
) -> OperationCount:
    """Run the scalar Hamilton product once on instrumented inputs."""
    tally = OperationCount()
    hamilton(instrumented(x, tally), instrumented(y, tally))
    return tally
