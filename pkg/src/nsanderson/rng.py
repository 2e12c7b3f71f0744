"""Reproducible random streams for parallel Monte Carlo.

Every stochastic routine in this package draws from a counter-based
Philox generator keyed by (seed, tag, index).  The key fixes the stream
completely, so a trial's draws do not depend on which worker runs it or
in what order trials are scheduled.  Tags separate modules ("growth",
"deviations", ...) so composed experiments never share streams.

Trials are grouped into fixed-size blocks for vectorized sampling: block
i always covers trial indices [i*BLOCK, (i+1)*BLOCK) and owns the stream
keyed by (seed, tag, i), independent of worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

BLOCK = 256


def _tag_to_int(tag: str) -> int:
    digest = hashlib.blake2s(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Generator for stream (seed, tag, index); same key, same draws."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(_tag_to_int(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def block_of(trial: int) -> tuple[int, int]:
    """(block index, offset within block) for a trial index."""
    return trial // BLOCK, trial % BLOCK


def uniform_block(seed: int, tag: str, block: int, shape: tuple[int, ...]) -> np.ndarray:
    """Uniform(0,1) draws for one trial block, shape (BLOCK, *shape).

    The full block is always generated, so a caller that needs only the
    first few trials of a block still sees the same per-trial numbers.
    """
    rng = substream(seed, tag, block)
    return rng.random((BLOCK,) + shape)
