"""Seed derivation.

Every random stream is a ``numpy`` PCG64 generator seeded from
``SeedSequence(seed, spawn_key=(label_key, chunk))`` where ``label_key`` is
the first 8 bytes of the BLAKE2b digest of the UTF-8 label, read as an
unsigned big-endian integer. Chunks are independent, so a sample of any size
is the concatenation of its chunks no matter how they were scheduled.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

CHUNK_SIZE = 1 << 16

T = TypeVar("T")


def label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_rng(seed: int, label: str, chunk: int = 0) -> np.random.Generator:
    if seed < 0 or seed >= 1 << 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=(label_key(label), chunk))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(n: int, chunk_size: int = CHUNK_SIZE) -> list[int]:
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def run_chunks(
    fn: Callable[[int, int], T], sizes: Sequence[int], workers: int = 1
) -> list[T]:
    """Apply ``fn(chunk_index, size)`` to every chunk, returning results in chunk order."""
    if workers <= 1 or len(sizes) <= 1:
        return [fn(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))
