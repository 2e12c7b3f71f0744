"""Deterministic fan-out over indexed tasks.

Results are returned in task order no matter how many workers run or
how they interleave, so any fixed-order reduction downstream (pairwise
sums over trial index) is invariant to the thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def run_indexed(fn: Callable[[int], T], count: int, threads: int = 1) -> list[T]:
    """[fn(0), ..., fn(count-1)], computed with up to ``threads`` workers."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def split_blocks(trials: int, block: int) -> list[tuple[int, int]]:
    """(block index, trials in block) covering ``trials`` in fixed blocks."""
    out = []
    full, rest = divmod(trials, block)
    for i in range(full):
        out.append((i, block))
    if rest:
        out.append((full, rest))
    return out
