"""Named random substreams derived from one integer seed."""

from __future__ import annotations

import zlib

import numpy as np


def _word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def substream(seed: int, *names) -> np.random.Generator:
    """Generator for the path ``names`` under ``seed``; independent of draw order elsewhere.

    >>> substream(1, "codebook").integers(100) == substream(1, "codebook").integers(100)
    True
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [_word(n) for n in names]))


def child_seed(seed: int, *names) -> int:
    """A plain integer seed for APIs that take ints."""
    return int(substream(seed, *names).integers(1 << 62))
