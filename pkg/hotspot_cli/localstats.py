"""
Local statistics with conditional-permutation inference.

For each cell i the focal value is held fixed and the remaining n-1 values are randomly
reassigned to i's neighbors: each replicate draws, without replacement, as many values
as i has neighbors. Cell i draws from its own stream (seed, i), so results do not depend
on the number of threads.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np

from hotspot_cli import permutation
from hotspot_cli.errors import ValidationError
from hotspot_cli.globalstats import ArrayLike, standardize, values_of
from hotspot_cli.permutation import Alternative
from hotspot_cli.weights import Standardization, WeightsMatrix

logger = logging.getLogger(__name__)

DEFAULT_LISA_ALPHA = 0.05
HOTSPOT_TIERS = (0.01, 0.05, 0.10)


class HotspotClass(str, Enum):
    HOT_99 = "Hot99"
    HOT_95 = "Hot95"
    HOT_90 = "Hot90"
    NOT_SIGNIFICANT = "NotSignificant"
    COLD_90 = "Cold90"
    COLD_95 = "Cold95"
    COLD_99 = "Cold99"
    NOT_APPLICABLE = "NotApplicable"


class LisaQuadrant(str, Enum):
    HH = "HH"
    HL = "HL"
    LH = "LH"
    LL = "LL"
    NOT_SIGNIFICANT = "NotSignificant"
    NOT_APPLICABLE = "NotApplicable"


# Labels used in group-size tables.
LISA_LABELS = {
    LisaQuadrant.HH: "High Crash-High HighG",
    LisaQuadrant.HL: "High Crash-Low HighG",
    LisaQuadrant.LH: "Low Crash-High HighG",
    LisaQuadrant.LL: "Low Crash-Low HighG",
    LisaQuadrant.NOT_SIGNIFICANT: "Not Significant (LISA)",
    LisaQuadrant.NOT_APPLICABLE: "Isolated cell",
}


@dataclass(frozen=True)
class LocalStatRow:
    """
    Result for one cell.

    `focal` is the standardized value of the first variable at the cell and `lag` the
    spatial lag of the standardized second variable (the same variable for univariate
    statistics). Isolated cells carry no p-value; degenerate Gi* cells report 0 with p 1.
    """

    cell_id: int
    statistic: float
    lag: float
    focal: float
    pseudo_p: Optional[float]
    category: str
    isolate: bool = False
    degenerate: bool = False


def _require(W: WeightsMatrix, standardization: Standardization, self_included: bool, what: str) -> None:
    if W.standardization is not standardization or W.self_included is not self_included:
        raise ValidationError(f"{what} needs {standardization.value} weights with self_included={self_included}")


def _conditional_pvalues(
    W: WeightsMatrix,
    observed: np.ndarray,
    focal_term,
    pool_values: np.ndarray,
    scale: np.ndarray,
    permutations: int,
    seed: int,
    threads: int,
    alternative: Union[str, Alternative],
    skip: np.ndarray,
) -> np.ndarray:
    """
    Conditional-permutation pseudo p for every cell not in `skip`.

    A replicate statistic for cell i is scale_i * (focal_term(i) + sum_k w_ik v_k), with
    the v_k drawn without replacement from `pool_values` minus cell i.
    """
    n = W.n
    p = np.full(n, np.nan)

    def run(block: range) -> None:
        for i in block:
            if skip[i]:
                continue
            ids, weights = W.row(i)
            others = ids != i
            w = weights[others]
            rng = permutation.stream(seed, permutation.LOCAL_STREAM, i)
            draws = permutation.sample_without_replacement(rng, n - 1, len(w), permutations)
            cells = permutation.pool_to_cells(draws, i)
            sims = scale[i] * (focal_term(i) + pool_values[cells] @ w)
            p[i] = permutation.pseudo_p(sims, observed[i], reference=0.0, alternative=alternative)

    permutation.parallel_map(run, n, threads)
    return p


def getis_ord_gstar(
    x: ArrayLike,
    W: WeightsMatrix,
    permutations: int = permutation.DEFAULT_PERMUTATIONS,
    seed: int = permutation.DEFAULT_SEED,
    threads: int = 1,
    alternative: Union[str, Alternative] = Alternative.DIRECTIONAL,
) -> List[LocalStatRow]:
    """
    Getis-Ord Gi* in its standardized (z-valued) form.

    G_i* = (sum_j w_ij x_j - mean(x) W_i) / (S sqrt((n W_i - W_i^2) / (n - 1)))
    with binary self-included weights, W_i = sum_j w_ij and S the population standard
    deviation. Cells whose neighborhood is the whole dataset have a zero denominator;
    they are reported as 0 with the degenerate flag and p = 1.

    Args:
        x: Cell values
        W: Binary weights with self-neighbors (see `weights.include_self`)
        permutations: Conditional permutations per cell
        seed: Base seed; cell i uses the stream (seed, i)
        threads: Worker threads
        alternative: Tail convention of the pseudo p-value

    Returns:
        One LocalStatRow per cell, classified into hotspot tiers

    Raises:
        ValidationError: If W is not binary and self-included
        DegenerateInputError: If x is constant over two or more cells
    """
    _require(W, Standardization.BINARY, True, "Gi*")
    permutation.check_permutations(permutations)
    raw = values_of(x, "Gi* variable")
    n = len(raw)
    if n != W.n:
        raise ValidationError(f"variable has {n} values but the weights cover {W.n} cells")

    # A lone cell has no variance to measure; it only gets the degenerate row below.
    if n >= 2:
        z = standardize(raw, "Gi* variable")
    wi = W.row_sums
    s1 = np.asarray(W.matrix.multiply(W.matrix).sum(axis=1)).ravel()
    spread = n * s1 - wi * wi
    degenerate = spread <= 1e-12 * np.maximum(1.0, wi * wi)
    if degenerate.all():
        logger.warning("every cell's neighborhood covers the whole grid; Gi* is degenerate")
        rows = [
            LocalStatRow(i, 0.0, 0.0, 0.0, 1.0, HotspotClass.NOT_SIGNIFICANT.value, degenerate=True)
            for i in range(n)
        ]
        return rows

    # With z = (x - mean) / S the numerator divided by S is simply sum_j w_ij z_j.
    scale = np.zeros(n)
    scale[~degenerate] = 1.0 / np.sqrt(spread[~degenerate] / (n - 1))
    wsum = W.lag(z)
    statistic = np.where(degenerate, 0.0, wsum * scale)
    self_w = W.matrix.diagonal()
    p = _conditional_pvalues(
        W, statistic, lambda i: self_w[i] * z[i], z, scale,
        permutations, seed, threads, alternative, skip=degenerate,
    )
    p[degenerate] = 1.0
    lag = np.where(wi > 0, wsum / np.where(wi > 0, wi, 1.0), 0.0)
    rows = [
        LocalStatRow(
            cell_id=i,
            statistic=float(statistic[i]),
            lag=float(lag[i]),
            focal=float(z[i]),
            pseudo_p=float(p[i]),
            category=HotspotClass.NOT_SIGNIFICANT.value,
            degenerate=bool(degenerate[i]),
        )
        for i in range(n)
    ]
    return [replace(r, category=c.value) for r, c in zip(rows, classify_hotspots(rows))]


def _moran_rows(
    zx: np.ndarray,
    zy: np.ndarray,
    W: WeightsMatrix,
    permutations: int,
    seed: int,
    threads: int,
    alternative: Union[str, Alternative],
) -> List[LocalStatRow]:
    n = len(zx)
    isolates = W.isolates
    lag = W.lag(zy)
    statistic = zx * lag
    p = _conditional_pvalues(
        W, statistic, lambda i: 0.0, zy, zx,
        permutations, seed, threads, alternative, skip=isolates,
    )
    rows = []
    for i in range(n):
        if isolates[i]:
            rows.append(
                LocalStatRow(i, 0.0, 0.0, float(zx[i]), None, LisaQuadrant.NOT_APPLICABLE.value, isolate=True)
            )
        else:
            rows.append(
                LocalStatRow(i, float(statistic[i]), float(lag[i]), float(zx[i]), float(p[i]),
                             LisaQuadrant.NOT_SIGNIFICANT.value)
            )
    return rows


def local_moran(
    x: ArrayLike,
    W: WeightsMatrix,
    permutations: int = permutation.DEFAULT_PERMUTATIONS,
    seed: int = permutation.DEFAULT_SEED,
    threads: int = 1,
    alternative: Union[str, Alternative] = Alternative.DIRECTIONAL,
    alpha: float = DEFAULT_LISA_ALPHA,
) -> List[LocalStatRow]:
    """Univariate local Moran I_i = z_i * sum_j w_ij z_j over row-standardized weights."""
    _require(W, Standardization.ROW, False, "local Moran")
    permutation.check_permutations(permutations)
    z = standardize(x, "local Moran variable")
    if len(z) != W.n:
        raise ValidationError(f"variable has {len(z)} values but the weights cover {W.n} cells")
    rows = _moran_rows(z, z, W, permutations, seed, threads, alternative)
    return [replace(r, category=c.value) for r, c in zip(rows, classify_lisa(rows, alpha))]


def bivariate_local_moran(
    x: ArrayLike,
    y: ArrayLike,
    W: WeightsMatrix,
    permutations: int = permutation.DEFAULT_PERMUTATIONS,
    seed: int = permutation.DEFAULT_SEED,
    threads: int = 1,
    alternative: Union[str, Alternative] = Alternative.DIRECTIONAL,
    alpha: float = DEFAULT_LISA_ALPHA,
) -> List[LocalStatRow]:
    """
    Bivariate local Moran I_i^xy = z_x,i * sum_j w_ij z_y,j.

    The conditional null holds z_x,i fixed and permutes z_y over the other n-1 cells.
    Rows come back classified into LISA quadrants at `alpha`.
    """
    _require(W, Standardization.ROW, False, "bivariate local Moran")
    permutation.check_permutations(permutations)
    zx = standardize(x, "bivariate x")
    zy = standardize(y, "bivariate y")
    if len(zx) != len(zy):
        raise ValidationError(f"x has {len(zx)} values but y has {len(zy)}")
    if len(zx) != W.n:
        raise ValidationError(f"variables have {len(zx)} values but the weights cover {W.n} cells")
    rows = _moran_rows(zx, zy, W, permutations, seed, threads, alternative)
    return [replace(r, category=c.value) for r, c in zip(rows, classify_lisa(rows, alpha))]


def classify_hotspots(rows: Sequence[LocalStatRow]) -> List[HotspotClass]:
    """Hotspot tier by pseudo p (0.01 / 0.05 / 0.10) and the sign of Gi*."""
    hot = (HotspotClass.HOT_99, HotspotClass.HOT_95, HotspotClass.HOT_90)
    cold = (HotspotClass.COLD_99, HotspotClass.COLD_95, HotspotClass.COLD_90)
    classes = []
    for row in rows:
        if row.isolate or row.pseudo_p is None:
            classes.append(HotspotClass.NOT_APPLICABLE)
            continue
        label = HotspotClass.NOT_SIGNIFICANT
        if row.statistic != 0 and not row.degenerate:
            tiers = hot if row.statistic > 0 else cold
            for threshold, tier in zip(HOTSPOT_TIERS, tiers):
                if row.pseudo_p < threshold:
                    label = tier
                    break
        classes.append(label)
    return classes


def classify_lisa(rows: Sequence[LocalStatRow], alpha: float = DEFAULT_LISA_ALPHA) -> List[LisaQuadrant]:
    """
    LISA quadrant of every cell.

    Significant cells (pseudo p < alpha) are placed by the signs of the focal value and
    the lag; a zero on either axis leaves the cell NotSignificant.
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    quadrants = []
    for row in rows:
        if row.isolate or row.pseudo_p is None:
            quadrants.append(LisaQuadrant.NOT_APPLICABLE)
        elif row.pseudo_p >= alpha or row.focal == 0 or row.lag == 0:
            quadrants.append(LisaQuadrant.NOT_SIGNIFICANT)
        elif row.focal > 0:
            quadrants.append(LisaQuadrant.HH if row.lag > 0 else LisaQuadrant.HL)
        else:
            quadrants.append(LisaQuadrant.LH if row.lag > 0 else LisaQuadrant.LL)
    return quadrants


def group_sizes(labels: Sequence[str], categories: Sequence[Enum]) -> List[tuple]:
    """(category, count) for every category, zero counts included, in declaration order."""
    counts = {c.value: 0 for c in categories}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    return list(counts.items())
