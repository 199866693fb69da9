"""Counter-addressable random streams.

Every random series in the simulator is cut into fixed blocks of
``BLOCK_SIZE`` samples.  Block ``b`` of a stream is drawn from its own
Philox generator keyed by ``(seed, stream_id, *path, tag, b)``, so any sample
range can be regenerated on its own and chunked generation is bit-identical
to whole-series generation, whatever the chunk boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError

BLOCK_SIZE = 1 << 16
_U64 = (1 << 64) - 1
# keeps SeedSequence entropy non-negative for blocks left of sample 0 (pre-roll)
_BLOCK_OFFSET = 1 << 40

# stream tags
SHOT = 1
THERMAL = 2
FLICKER = 3
SPECKLE = 4
WHITE = 5
ACCELEROMETER = 6


@dataclass(frozen=True)
class RandomSeed:
    seed: int = 0
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for v in (self.seed, self.stream_id, *self.path):
            if not 0 <= int(v) <= _U64:
                raise InvalidInputError(f"seed components must be unsigned 64-bit, got {v}")

    def spawn(self, index: int) -> RandomSeed:
        """Child seed for sub-stream ``index``; children of one parent never collide."""
        return RandomSeed(self.seed, self.stream_id, self.path + (int(index),))

    def generator(self, tag: int, block: int = 0) -> np.random.Generator:
        entropy = [self.seed, self.stream_id, *self.path, tag, block + _BLOCK_OFFSET]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _blocked(
    seed: RandomSeed,
    tag: int,
    start: int,
    stop: int,
    draw: Callable[[np.random.Generator, int], np.ndarray],
) -> np.ndarray:
    if stop < start:
        raise InvalidInputError(f"empty range [{start}, {stop})")
    out = np.empty(stop - start)
    first = start // BLOCK_SIZE
    last = (stop - 1) // BLOCK_SIZE if stop > start else first - 1
    for block in range(first, last + 1):
        b0 = block * BLOCK_SIZE
        values = draw(seed.generator(tag, block), BLOCK_SIZE)
        lo = max(start, b0)
        hi = min(stop, b0 + BLOCK_SIZE)
        out[lo - start:hi - start] = values[lo - b0:hi - b0]
    return out


def standard_normal(seed: RandomSeed, tag: int, start: int, stop: int) -> np.ndarray:
    """N(0, 1) samples for global indices ``[start, stop)`` of stream ``tag``."""
    return _blocked(seed, tag, start, stop, lambda g, n: g.standard_normal(n))


def standard_exponential(seed: RandomSeed, tag: int, start: int, stop: int) -> np.ndarray:
    """Exp(1) samples for global indices ``[start, stop)`` of stream ``tag``."""
    return _blocked(seed, tag, start, stop, lambda g, n: g.standard_exponential(n))
