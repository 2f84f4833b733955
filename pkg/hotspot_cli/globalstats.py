"""
Global Moran's I and global bivariate Moran's I with permutation inference.

Both statistics expect row-standardized weights and standardize variables with the
population variance (denominator n).
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Union

import numpy as np

from hotspot_cli import permutation
from hotspot_cli.errors import DegenerateInputError, ValidationError
from hotspot_cli.grid import CellVariable
from hotspot_cli.permutation import Alternative
from hotspot_cli.weights import Standardization, WeightsMatrix

logger = logging.getLogger(__name__)

ArrayLike = Union[CellVariable, np.ndarray, List[float]]

# Permuted vectors are stacked this many at a time for one sparse product.
_BATCH = 64


@dataclass(frozen=True)
class GlobalStatResult:
    name: str
    statistic: float
    expected_under_null: float
    pseudo_p: float
    n_permutations: int
    seed: int

    def to_row(self) -> Dict[str, object]:
        row = asdict(self)
        return {
            "name": row["name"],
            "statistic": row["statistic"],
            "expected": row["expected_under_null"],
            "pseudo_p": row["pseudo_p"],
            "permutations": row["n_permutations"],
            "seed": row["seed"],
        }


def values_of(x: ArrayLike, label: str = "variable") -> np.ndarray:
    if isinstance(x, CellVariable):
        return x.values
    values = np.asarray(x, dtype=float)
    if values.ndim != 1 or not np.all(np.isfinite(values)):
        raise ValidationError(f"{label} must be a finite one-dimensional vector")
    return values


def standardize(x: ArrayLike, label: str = "variable") -> np.ndarray:
    """
    Center to mean 0 and scale to population variance 1.

    Raises:
        DegenerateInputError: If the variable is constant
    """
    values = values_of(x, label)
    if len(values) < 2:
        raise DegenerateInputError(f"{label}: zero variance (fewer than two cells)")
    centered = values - values.mean()
    sd = np.sqrt(np.mean(centered * centered))
    if sd == 0 or sd <= 1e-14 * max(1.0, float(np.max(np.abs(values)))):
        raise DegenerateInputError(f"{label}: zero variance (constant values)")
    return centered / sd


def _require_row_standardized(W: WeightsMatrix) -> None:
    if W.standardization is not Standardization.ROW:
        raise ValidationError("Moran statistics need row-standardized weights")


def _check_lengths(W: WeightsMatrix, *vectors: np.ndarray) -> None:
    for v in vectors:
        if len(v) != W.n:
            raise ValidationError(f"variable has {len(v)} values but the weights cover {W.n} cells")


def _simulate(
    n_permutations: int,
    seed: int,
    threads: int,
    n: int,
    statistic,
) -> np.ndarray:
    """Run `statistic(perms)` over K full permutations, one seeded stream per replicate."""
    n_batches = -(-n_permutations // _BATCH)

    def run(batches: range) -> np.ndarray:
        parts = []
        # Batch b always covers replicates [b * _BATCH, (b + 1) * _BATCH), whatever the thread count.
        for b in batches:
            ids = range(b * _BATCH, min(n_permutations, (b + 1) * _BATCH))
            perms = np.stack([permutation.stream(seed, permutation.GLOBAL_STREAM, k).permutation(n) for k in ids])
            parts.append(statistic(perms))
        return np.concatenate(parts) if parts else np.empty(0)

    return np.concatenate(permutation.parallel_map(run, n_batches, threads, chunks_per_thread=1))


def global_moran(
    x: ArrayLike,
    W: WeightsMatrix,
    permutations: int = permutation.DEFAULT_PERMUTATIONS,
    seed: int = permutation.DEFAULT_SEED,
    threads: int = 1,
    alternative: Union[str, Alternative] = Alternative.DIRECTIONAL,
    name: str = "moran",
) -> GlobalStatResult:
    """
    Global Moran's I = sum_i z_i * sum_j w_ij z_j / sum_i z_i^2.

    Args:
        x: Cell values
        W: Row-standardized weights
        permutations: Number of random permutations K
        seed: Base seed; replicate k uses the stream (seed, k)
        threads: Worker threads for the replicates
        alternative: Tail convention of the pseudo p-value
        name: Label reported in the result

    Returns:
        GlobalStatResult with E[I] = -1/(n-1); the directional tail follows the sign of I
    """
    _require_row_standardized(W)
    permutation.check_permutations(permutations)
    z = standardize(x, name)
    _check_lengths(W, z)
    n = len(z)
    denom = float(z @ z)
    observed = float(z @ W.lag(z)) / denom

    def stat(perms: np.ndarray) -> np.ndarray:
        zp = z[perms]
        lags = (W.matrix @ zp.T).T
        return np.einsum("ij,ij->i", zp, lags) / denom

    sims = _simulate(permutations, seed, threads, n, stat)
    expected = -1.0 / (n - 1)
    p = permutation.pseudo_p(sims, observed, reference=0.0, alternative=alternative)
    logger.debug("%s: I=%.6f E[I]=%.6f p=%.4f (K=%d)", name, observed, expected, p, permutations)
    return GlobalStatResult(name, observed, expected, p, permutations, seed)


def global_bivariate_moran(
    x: ArrayLike,
    y: ArrayLike,
    W: WeightsMatrix,
    permutations: int = permutation.DEFAULT_PERMUTATIONS,
    seed: int = permutation.DEFAULT_SEED,
    threads: int = 1,
    alternative: Union[str, Alternative] = Alternative.DIRECTIONAL,
    name: str = "bivariate_moran",
) -> GlobalStatResult:
    """
    Global bivariate Moran's I_xy = sum_i z_x,i * sum_j w_ij z_y,j / n.

    The permutation null keeps x in place and permutes y over all cells, so E[I_xy] = 0.
    """
    _require_row_standardized(W)
    permutation.check_permutations(permutations)
    zx = standardize(x, f"{name} (x)")
    zy = standardize(y, f"{name} (y)")
    if len(zx) != len(zy):
        raise ValidationError(f"x has {len(zx)} values but y has {len(zy)}")
    _check_lengths(W, zx)
    n = len(zx)
    observed = float(zx @ W.lag(zy)) / n

    def stat(perms: np.ndarray) -> np.ndarray:
        lags = (W.matrix @ zy[perms].T).T
        return lags @ zx / n

    sims = _simulate(permutations, seed, threads, n, stat)
    p = permutation.pseudo_p(sims, observed, reference=0.0, alternative=alternative)
    logger.debug("%s: I_xy=%.6f p=%.4f (K=%d)", name, observed, p, permutations)
    return GlobalStatResult(name, observed, 0.0, p, permutations, seed)
