"""
Core Utilities.

Shared helpers used across the package. Every random stream is derived
from the master seed and a stage name, so a stage that consumes more or
fewer draws never shifts the streams of other stages.
"""

import hashlib
import time
from collections.abc import Iterator
from contextlib import contextmanager

import numpy as np


def derive_seed(master_seed: int, stage: str) -> int:
    """Hash (master_seed, stage) into a 64-bit seed."""
    digest = hashlib.blake2b(
        f"{int(master_seed)}:{stage}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def derive_rng(master_seed: int, stage: str) -> np.random.Generator:
    """Independent numpy Generator for one pipeline stage."""
    return np.random.default_rng(derive_seed(master_seed, stage))


@contextmanager
def stopwatch() -> Iterator[dict[str, float]]:
    """Measure wall time of a block. Yields a dict filled with 'seconds' on exit."""
    box: dict[str, float] = {"seconds": 0.0}
    start = time.perf_counter()
    try:
        yield box
    finally:
        box["seconds"] = time.perf_counter() - start
