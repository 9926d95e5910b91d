"""Seed-deterministic block decomposition for Monte Carlo ensembles.

An ensemble of ``n`` items is cut into fixed-size blocks, each with its own
stream spawned from one ``SeedSequence``.  The block layout depends only on
``n`` and ``block``, never on the thread count, and results are reduced in
block order, so output is identical for any ``threads``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BLOCK = 1 << 16


def blocks(seed, n, block=DEFAULT_BLOCK):
    """List of (size, Generator) covering ``n`` items."""
    sizes = [min(block, n - s) for s in range(0, n, block)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(k, np.random.Generator(np.random.Philox(c))) for k, c in zip(sizes, children)]


def map_blocks(fn, seed, n, threads=1, block=DEFAULT_BLOCK):
    """Apply ``fn(size, rng)`` to every block; results come back in block order."""
    work = blocks(seed, n, block)
    if threads <= 1 or len(work) == 1:
        return [fn(k, rng) for k, rng in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda kr: fn(*kr), work))
