"""bench: scalar Hamilton products against the batched matrix form."""

import logging
import time

import numpy as np

from qlstm_multimic.core.counting import count_hamilton_operations
from qlstm_multimic.core.quaternion import ZERO, hamilton
from qlstm_multimic.core.tensor import QuaternionTensor, qmat_vec
from qlstm_multimic.models.results import BenchReport, BenchRow
from qlstm_multimic.utils.error_handling import DomainError, NumericalError

logger = logging.getLogger(__name__)

EQUIVALENCE_TOLERANCE = 1e-9


def scalar_qmat_vec(w: QuaternionTensor, x: QuaternionTensor) -> QuaternionTensor:
    """W ⊛ x with one scalar Hamilton product per weight."""
    n_out, n_in = w.shape
    inputs = [x.item(j) for j in range(n_in)]
    rows = []
    for i in range(n_out):
        acc = ZERO
        for j in range(n_in):
            acc = acc + hamilton(w.item(i, j), inputs[j])
        rows.append(acc)
    return QuaternionTensor.from_quaternions(rows)


def bench_size(n: int, rng: np.random.Generator, repeats: int = 1) -> BenchRow:
    if n < 1:
        raise DomainError(f"bench size must be positive, got {n}")
    w = QuaternionTensor(*(rng.standard_normal((n, n)) for _ in range(4)))
    x = QuaternionTensor(*(rng.standard_normal(n) for _ in range(4)))

    started = time.perf_counter()
    for _ in range(repeats):
        scalar = scalar_qmat_vec(w, x)
    scalar_s = (time.perf_counter() - started) / repeats

    batched_repeats = max(repeats, 10)
    started = time.perf_counter()
    for _ in range(batched_repeats):
        batched = qmat_vec(w, x)
    batched_s = (time.perf_counter() - started) / batched_repeats

    diff = float(np.max(np.abs(scalar.stack() - batched.stack())))
    scale = max(1.0, float(np.max(np.abs(batched.stack()))))
    if diff > EQUIVALENCE_TOLERANCE * scale:
        raise NumericalError(f"scalar and batched products disagree by {diff:.3e} at size {n}")

    products = n * n
    scalar_rate = products / max(scalar_s, 1e-12)
    batched_rate = products / max(batched_s, 1e-12)
    return BenchRow(
        size=n,
        n_products=products,
        scalar_products_per_s=scalar_rate,
        batched_products_per_s=batched_rate,
        speedup=batched_rate / scalar_rate,
        max_abs_diff=diff,
        ops_per_product=count_hamilton_operations().total,
    )


def cmd_bench(sizes: list[int], seed: int = 0, repeats: int = 1) -> BenchReport:
    """One row per requested size, in the order given."""
    rng = np.random.default_rng(seed)
    report = BenchReport()
    for n in sizes:
        row = bench_size(n, rng, repeats)
        logger.info("size %d: %.0f scalar vs %.0f batched products/s", n, row.scalar_products_per_s, row.batched_products_per_s)
        report.rows.append(row)
    return report
