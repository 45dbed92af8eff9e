"""Counter-based random streams.

A stream is a (seed, stream_id) pair keyed into numpy's Philox generator, so
the same pair gives the same draws on every run and platform. Streams are
values: callers derive substreams instead of sharing a mutable generator.
"""

from dataclasses import dataclass

import numpy as np

from src.errors import InvalidArgumentError
from src.numerics.arrays import Matrix, Vector

_UINT64 = 1 << 64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value < _UINT64:
                raise InvalidArgumentError(
                    f"{name} must be a 64-bit unsigned integer, got {value}"
                )

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at draw 0 of this stream."""
        key = (self.seed << 64) | self.stream_id
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        """Derive an independent child stream for `index`."""
        if index < 0:
            raise InvalidArgumentError(f"substream index must be >= 0, got {index}")
        mixed = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, index)
        ).generate_state(1, dtype=np.uint64)[0]
        return RngStream(self.seed, int(mixed))


def sample_std_normal(rng: RngStream, n: int) -> Vector:
    """Draw n i.i.d. standard normals from the start of `rng`."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    return rng.generator().standard_normal(n)


def sample_std_normal_matrix(rng: RngStream, rows: int, cols: int) -> Matrix:
    """Draw a rows x cols block of standard normals (row-major draw order)."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"shape must be positive, got ({rows}, {cols})")
    return rng.generator().standard_normal((rows, cols))
