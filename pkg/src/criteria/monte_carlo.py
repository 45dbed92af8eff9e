"""
Blocked Monte Carlo

Draws are generated in blocks of `MC_BLOCK`; block b reads substream b of the
estimator seed. Blocks can be evaluated on a thread pool and are always
concatenated in block order, so the estimate does not depend on the number of
threads.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.config import settings
from src.errors import InvalidArgumentError
from src.numerics.arrays import Matrix, Vector
from src.numerics.rng import RngStream, sample_std_normal_matrix

# (block index, rows in block) -> per-draw values
BlockFn = Callable[[int, int], Vector]


def block_sizes(samples: int, block: Optional[int] = None) -> List[Tuple[int, int]]:
    block = block or settings.MC_BLOCK
    if samples < 2:
        raise InvalidArgumentError(f"need at least 2 Monte Carlo samples, got {samples}")
    count = -(-samples // block)
    return [(b, min(block, samples - b * block)) for b in range(count)]


def gaussian_block(seed: int, index: int, rows: int, dim: int, sigma: float) -> Matrix:
    """sigma * N(0, I) block for draw block `index` of `seed`."""
    return sigma * sample_std_normal_matrix(RngStream(seed).substream(index), rows, dim)


def run_blocks(evaluate: BlockFn, samples: int, threads: int = 1) -> Vector:
    blocks = block_sizes(samples)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda blk: evaluate(*blk), blocks))
    else:
        parts = [evaluate(index, rows) for index, rows in blocks]
    return np.concatenate(parts)


def mean_and_error(draws: Vector) -> Tuple[float, float]:
    """Sample mean and its standard error std(ddof=1) / sqrt(S)."""
    mean = float(np.mean(draws))
    if not np.any(draws != draws[0]):
        return mean, 0.0
    return mean, float(np.std(draws, ddof=1) / np.sqrt(draws.shape[0]))
