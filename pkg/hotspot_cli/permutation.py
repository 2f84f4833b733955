"""
Seeded Monte-Carlo machinery shared by the global and local statistics.

Every replicate (global statistics) or cell (local statistics) draws from its own
generator, derived from (seed, stream tag, index) through numpy's SeedSequence. Work can
therefore be split across any number of threads without changing a single draw.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, TypeVar, Union

import numpy as np

from hotspot_cli.errors import ValidationError

DEFAULT_PERMUTATIONS = 999
DEFAULT_SEED = 42

# Stream tags keep global replicate streams apart from per-cell streams.
GLOBAL_STREAM = 0
LOCAL_STREAM = 1

# Pools at most this large (or too small for cheap rejection) are sampled by sorting keys.
_DENSE_POOL = 256

T = TypeVar("T")


class Alternative(str, Enum):
    DIRECTIONAL = "directional"
    TWO_SIDED = "two-sided"


def default_threads() -> int:
    env = os.environ.get("HOTSPOT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"HOTSPOT_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def check_permutations(permutations: int) -> None:
    if permutations < 1:
        raise ValidationError(f"permutations must be at least 1, got {permutations}")


def stream(seed: int, tag: int, index: int) -> np.random.Generator:
    """Independent generator for one replicate or one cell."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag, int(index)]))


def sample_without_replacement(rng: np.random.Generator, pool_size: int, k: int, n_draws: int) -> np.ndarray:
    """
    Draw `n_draws` ordered samples of `k` distinct indices from range(pool_size).

    Each row is uniform over ordered k-subsets of the pool.

    Returns:
        Integer array of shape (n_draws, k)
    """
    if k > pool_size:
        raise ValidationError(f"cannot draw {k} distinct values from a pool of {pool_size}")
    if k == 0:
        return np.empty((n_draws, 0), dtype=np.int64)
    if pool_size <= _DENSE_POOL or 4 * k > pool_size:
        keys = rng.random((n_draws, pool_size))
        return np.argsort(keys, axis=1)[:, :k]
    draws = rng.integers(0, pool_size, size=(n_draws, k))
    if k == 1:
        return draws
    while True:
        ordered = np.sort(draws, axis=1)
        clash = (ordered[:, 1:] == ordered[:, :-1]).any(axis=1)
        if not clash.any():
            return draws
        # Whole rows are redrawn so accepted rows stay uniform.
        draws[clash] = rng.integers(0, pool_size, size=(int(clash.sum()), k))


def exceedances(simulated: np.ndarray, observed: float, upper: bool) -> int:
    """Replicates at least as extreme as `observed` on one side, ties included."""
    tol = 1e-9 * (1.0 + abs(observed))
    if upper:
        return int(np.count_nonzero(simulated >= observed - tol))
    return int(np.count_nonzero(simulated <= observed + tol))


def pseudo_p(
    simulated: np.ndarray,
    observed: float,
    reference: float = 0.0,
    alternative: Union[str, Alternative] = Alternative.DIRECTIONAL,
) -> float:
    """
    Permutation pseudo p-value (1 + exceedances) / (1 + K).

    Args:
        simulated: Statistic under K permutations
        observed: Observed statistic
        reference: Value separating the upper from the lower tail (the null expectation)
        alternative: `directional` tests the tail the observed value lies in;
            `two-sided` doubles that, capped at 1

    Returns:
        Pseudo p in (0, 1]
    """
    upper = observed >= reference
    p = (1.0 + exceedances(simulated, observed, upper)) / (1.0 + len(simulated))
    if Alternative(alternative) is Alternative.TWO_SIDED:
        p = min(1.0, 2.0 * p)
    return p


def chunked(n: int, n_chunks: int) -> List[range]:
    """Split range(n) into at most n_chunks contiguous ranges."""
    n_chunks = max(1, min(n_chunks, n)) if n else 1
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [range(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def parallel_map(func: Callable[[range], T], n: int, threads: int, chunks_per_thread: int = 4) -> List[T]:
    """
    Apply `func` to contiguous index ranges covering range(n), in order.

    Results come back in range order regardless of the number of threads, so callers
    that write into preallocated arrays by index stay deterministic.
    """
    threads = max(1, int(threads))
    ranges = chunked(n, threads * chunks_per_thread if threads > 1 else 1)
    if threads == 1 or len(ranges) == 1:
        return [func(r) for r in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, ranges))


def pool_to_cells(pool_ids: np.ndarray, focal: int) -> np.ndarray:
    """Map indices into the n-1 non-focal cells back to cell ids."""
    return pool_ids + (pool_ids >= focal)


