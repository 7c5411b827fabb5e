"""Deterministic seed derivation."""

import numpy as np


def child_seeds(seed: int, count: int) -> list[int]:
    """Derive `count` independent 32-bit seeds from one root seed.

    The same (seed, count) pair always yields the same list, and the first k
    entries do not depend on count.
    """
    if count <= 0:
        return []
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]
