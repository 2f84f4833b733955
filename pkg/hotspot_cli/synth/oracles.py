"""
Brute-force reference implementations.

Plain Python loops over explicit formulas; nothing here imports the engine modules, so
agreement between the two is evidence rather than tautology. Spatial oracles build their
own neighbor lists from (n_rows, n_cols) and are limited to small grids.
"""

import itertools
import math
from typing import List, Sequence, Tuple

from hotspot_cli.errors import ValidationError

MAX_CELLS = 400
MAX_MW_N = 16


def _neighbors(n_rows: int, n_cols: int, contiguity: str) -> List[List[int]]:
    if contiguity not in ("queen", "rook"):
        raise ValidationError(f"unknown contiguity {contiguity!r}")
    out = []
    for r in range(n_rows):
        for c in range(n_cols):
            cell = []
            for r2 in range(n_rows):
                for c2 in range(n_cols):
                    dr, dc = abs(r2 - r), abs(c2 - c)
                    if (dr, dc) == (0, 0):
                        continue
                    if contiguity == "rook" and dr + dc == 1:
                        cell.append(r2 * n_cols + c2)
                    elif contiguity == "queen" and max(dr, dc) == 1:
                        cell.append(r2 * n_cols + c2)
            out.append(cell)
    return out


def _z(values: Sequence[float]) -> List[float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    if var == 0:
        raise ValidationError("oracle input has zero variance")
    sd = math.sqrt(var)
    return [(v - mean) / sd for v in values]


def _row_std(nbrs: List[List[int]], n: int) -> List[List[float]]:
    dense = [[0.0] * n for _ in range(n)]
    for i, cell in enumerate(nbrs):
        for j in cell:
            dense[i][j] = 1.0 / len(cell)
    return dense


def _check_grid(values: Sequence[float], n_rows: int, n_cols: int) -> int:
    n = n_rows * n_cols
    if n > MAX_CELLS:
        raise ValidationError(f"oracles are limited to {MAX_CELLS} cells, got {n}")
    if len(values) != n:
        raise ValidationError(f"{len(values)} values for a {n_rows}x{n_cols} grid")
    return n


def global_moran(x, n_rows, n_cols, contiguity="queen") -> float:
    n = _check_grid(x, n_rows, n_cols)
    w = _row_std(_neighbors(n_rows, n_cols, contiguity), n)
    mean = sum(x) / n
    z = [v - mean for v in x]
    num = 0.0
    for i in range(n):
        for j in range(n):
            num += w[i][j] * z[i] * z[j]
    return num / sum(v * v for v in z)


def global_bivariate(x, y, n_rows, n_cols, contiguity="queen") -> float:
    n = _check_grid(x, n_rows, n_cols)
    _check_grid(y, n_rows, n_cols)
    w = _row_std(_neighbors(n_rows, n_cols, contiguity), n)
    zx, zy = _z(x), _z(y)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += zx[i] * w[i][j] * zy[j]
    return total / n


def gi_star(x, n_rows, n_cols, contiguity="queen") -> List[float]:
    n = _check_grid(x, n_rows, n_cols)
    nbrs = _neighbors(n_rows, n_cols, contiguity)
    mean = sum(x) / n
    s = math.sqrt(sum(v * v for v in x) / n - mean * mean)
    if s == 0:
        raise ValidationError("oracle input has zero variance")
    out = []
    for i in range(n):
        star = [i] + nbrs[i]
        wi = float(len(star))
        num = sum(x[j] for j in star) - mean * wi
        spread = (n * wi - wi * wi) / (n - 1)
        out.append(0.0 if spread <= 0 else num / (s * math.sqrt(spread)))
    return out


def local_moran(x, n_rows, n_cols, contiguity="queen") -> List[float]:
    return bivariate_local_moran(x, x, n_rows, n_cols, contiguity)


def bivariate_local_moran(x, y, n_rows, n_cols, contiguity="queen") -> List[float]:
    n = _check_grid(x, n_rows, n_cols)
    _check_grid(y, n_rows, n_cols)
    w = _row_std(_neighbors(n_rows, n_cols, contiguity), n)
    zx, zy = _z(x), _z(y)
    out = []
    for i in range(n):
        lag = 0.0
        for j in range(n):
            lag += w[i][j] * zy[j]
        out.append(zx[i] * lag)
    return out


def _midranks(values: Sequence[float]) -> List[float]:
    ranks = [0.0] * len(values)
    for i, v in enumerate(values):
        below = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        ranks[i] = below + (equal + 1) / 2.0
    return ranks


def mann_whitney_exact(a, b) -> Tuple[float, float]:
    """(U of a, exact two-sided p) by enumerating all group assignments."""
    n_a, n_b = len(a), len(b)
    if n_a == 0 or n_b == 0:
        raise ValidationError("oracle needs two nonempty samples")
    if n_a + n_b > MAX_MW_N:
        raise ValidationError(f"exact oracle is limited to {MAX_MW_N} observations")
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    offset = n_a * (n_a + 1) / 2.0
    u_obs = sum(ranks[:n_a]) - offset
    centre = n_a * n_b / 2.0
    splits = list(itertools.combinations(range(n_a + n_b), n_a))
    hits = 0
    for split in splits:
        u = sum(ranks[k] for k in split) - offset
        if abs(u - centre) >= abs(u_obs - centre) - 1e-9:
            hits += 1
    return u_obs, hits / len(splits)


_ORACLES = {
    "global_moran": global_moran,
    "global_bivariate": global_bivariate,
    "gi_star": gi_star,
    "local_moran": local_moran,
    "bivariate_local_moran": bivariate_local_moran,
    "mann_whitney_exact": mann_whitney_exact,
}


def oracle_stat(name: str, *args, **kwargs):
    """
    Reference value(s) of a statistic by name.

    Spatial oracles take (values..., n_rows, n_cols, contiguity="queen");
    `mann_whitney_exact` takes (a, b).
    """
    try:
        func = _ORACLES[name]
    except KeyError:
        raise ValidationError(f"unknown oracle {name!r}; choose from {sorted(_ORACLES)}")
    return func(*args, **kwargs)
