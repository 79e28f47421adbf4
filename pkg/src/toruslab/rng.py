"""Deterministic random substreams.

Every stochastic routine takes a single 64-bit seed. Independent streams are
derived from ``(seed, tag, index)`` through :class:`numpy.random.SeedSequence`
spawn keys, so that adding samples to an ensemble never reshuffles the ones
already drawn.
"""

from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Generator for sample ``index`` of the ensemble labelled ``tag``."""
    ss = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=(tag_key(tag), int(index)))
    return np.random.Generator(np.random.PCG64(ss))
