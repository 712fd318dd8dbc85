"""Deterministic derivation of independent random streams.

A master seed plus a path of labels (experiment tag, run index, ...) maps to
one `numpy.random.Generator`. Streams for different paths are statistically
independent, and the derivation is stable across processes, so per-run
substreams can be handed to parallel workers without sharing state.
"""

from __future__ import annotations

import zlib

import numpy as np


def _encode(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    raise TypeError(f"stream path parts must be int or str, got {type(part)!r}")


def substream(seed: int, *path: int | str) -> np.random.Generator:
    """Return the generator for `(seed, *path)`.

    Calling twice with the same arguments yields identical streams; any
    change to the seed or to one path component yields an unrelated stream.
    """
    entropy = [_encode(seed)] + [_encode(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
