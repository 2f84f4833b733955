"""
POI count features and Mann-Whitney U comparisons between LISA groups.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Union

import numpy as np
from scipy import stats

from hotspot_cli.errors import ValidationError
from hotspot_cli.grid import EventPoint, GridSpec, locate_many
from hotspot_cli.localstats import LisaQuadrant

logger = logging.getLogger(__name__)

DEFAULT_MW_ALPHA = 0.05
# Combined sample sizes up to this use exact enumeration.
EXACT_MAX_N = 12


@dataclass
class PoiFeatureMatrix:
    """Per-cell POI counts, one column per POI type (types sorted)."""

    types: List[str]
    counts: np.ndarray
    dropped: int = 0

    @property
    def n_cells(self) -> int:
        return self.counts.shape[0]

    def column(self, poi_type: str) -> np.ndarray:
        try:
            return self.counts[:, self.types.index(poi_type)]
        except ValueError:
            raise ValidationError(f"unknown POI type {poi_type!r}")

    def cell_counts(self, cell_id: int) -> Dict[str, int]:
        return {t: int(c) for t, c in zip(self.types, self.counts[cell_id]) if c}

    def totals(self) -> Dict[str, int]:
        return {t: int(c) for t, c in zip(self.types, self.counts.sum(axis=0))}


class UTest(NamedTuple):
    u_statistic: float
    p_value: float
    method: str


@dataclass(frozen=True)
class MWResult:
    poi_type: str
    u_statistic: float
    p_value: float
    mean_group_a: float
    mean_group_b: float
    significant: bool
    n_a: int
    n_b: int
    method: str

    def to_row(self) -> Dict[str, object]:
        return {
            "poi_type": self.poi_type,
            "u_statistic": self.u_statistic,
            "p_value": self.p_value,
            "mean_group_a": self.mean_group_a,
            "mean_group_b": self.mean_group_b,
            "significant": self.significant,
        }


def count_pois(pois: Sequence[EventPoint], g: GridSpec) -> PoiFeatureMatrix:
    """
    Count POIs of each kind per cell with the grid's half-open membership rule.

    Points without a kind are counted under the empty string type.
    """
    kinds = [p.kind or "" for p in pois]
    types = sorted(set(kinds))
    counts = np.zeros((g.n_cells, len(types)), dtype=np.int64)
    if not pois:
        return PoiFeatureMatrix(types=[], counts=counts)
    cells = locate_many([p.x for p in pois], [p.y for p in pois], g)
    column = {t: k for k, t in enumerate(types)}
    type_idx = np.array([column[k] for k in kinds], dtype=np.int64)
    inside = cells >= 0
    np.add.at(counts, (cells[inside], type_idx[inside]), 1)
    dropped = int((~inside).sum())
    if dropped:
        logger.info("%d POIs outside the grid extent were dropped", dropped)
    return PoiFeatureMatrix(types=types, counts=counts, dropped=dropped)


def _exact_p(pooled: np.ndarray, n_a: int, u_obs: float) -> float:
    """Two-sided p by enumerating every split of the pooled midranks."""
    ranks = stats.rankdata(pooled)
    n_b = len(pooled) - n_a
    mean_u = n_a * n_b / 2.0
    dev_obs = abs(u_obs - mean_u)
    hits = total = 0
    for combo in itertools.combinations(range(len(pooled)), n_a):
        u = float(ranks[list(combo)].sum()) - n_a * (n_a + 1) / 2.0
        total += 1
        if abs(u - mean_u) >= dev_obs - 1e-9:
            hits += 1
    return hits / total


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> UTest:
    """
    Two-sided Mann-Whitney U test of sample `a` against sample `b`.

    U is the statistic of `a` from midranks. For n_a + n_b <= 12 the p-value comes from
    exact enumeration over all group assignments; above that from scipy's normal
    approximation with tie and continuity corrections.

    Raises:
        ValidationError: If either sample is empty
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_a, n_b = len(a), len(b)
    if n_a == 0 or n_b == 0:
        raise ValidationError(f"Mann-Whitney needs two nonempty samples, got sizes {n_a} and {n_b}")
    pooled = np.concatenate([a, b])
    ranks = stats.rankdata(pooled)
    u_a = float(ranks[:n_a].sum()) - n_a * (n_a + 1) / 2.0
    if n_a + n_b <= EXACT_MAX_N:
        return UTest(u_a, _exact_p(pooled, n_a, u_a), "exact")
    # Zero rank variance; scipy would return nan.
    if np.all(pooled == pooled[0]):
        return UTest(u_a, 1.0, "asymptotic")
    result = stats.mannwhitneyu(a, b, use_continuity=True, alternative="two-sided", method="asymptotic")
    return UTest(u_a, min(1.0, float(result.pvalue)), "asymptotic")


def _quadrant(label: Union[str, LisaQuadrant]) -> LisaQuadrant:
    try:
        return LisaQuadrant(label)
    except ValueError:
        raise ValidationError(f"unknown LISA group {label!r}")


def compare_groups(
    features: PoiFeatureMatrix,
    quadrants: Sequence[Union[str, LisaQuadrant]],
    group_a: Union[str, LisaQuadrant] = LisaQuadrant.HH,
    group_b: Union[str, LisaQuadrant] = LisaQuadrant.LH,
    alpha: float = DEFAULT_MW_ALPHA,
    threads: int = 1,
) -> List[MWResult]:
    """
    One Mann-Whitney test per POI type between the cells of two LISA groups.

    Args:
        features: POI counts per cell
        quadrants: LISA quadrant of every cell
        group_a: First group (U is reported for this group)
        group_b: Second group
        alpha: Significance level of the `significant` column
        threads: Worker threads across POI types

    Returns:
        Results sorted by (p_value, poi_type)

    Raises:
        ValidationError: If the groups coincide, a group has no cells or lengths disagree
    """
    group_a, group_b = _quadrant(group_a), _quadrant(group_b)
    if group_a is group_b:
        raise ValidationError(f"cannot compare LISA group {group_a.value} with itself")
    if len(quadrants) != features.n_cells:
        raise ValidationError(f"{len(quadrants)} quadrant labels for {features.n_cells} cells")
    labels = np.array([_quadrant(q).value for q in quadrants])
    in_a = labels == group_a.value
    in_b = labels == group_b.value
    for group, mask in ((group_a, in_a), (group_b, in_b)):
        if not mask.any():
            raise ValidationError(f"comparison group {group.value} has no cells")
    n_a, n_b = int(in_a.sum()), int(in_b.sum())

    def test(poi_type: str) -> MWResult:
        column = features.column(poi_type)
        a, b = column[in_a], column[in_b]
        result = mann_whitney_u(a, b)
        return MWResult(
            poi_type=poi_type,
            u_statistic=result.u_statistic,
            p_value=result.p_value,
            mean_group_a=float(a.sum()) / n_a,
            mean_group_b=float(b.sum()) / n_b,
            significant=result.p_value < alpha,
            n_a=n_a,
            n_b=n_b,
            method=result.method,
        )

    if threads > 1 and len(features.types) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(test, features.types))
    else:
        results = [test(t) for t in features.types]
    logger.info("%d Mann-Whitney tests between %s (%d cells) and %s (%d cells)",
                len(results), group_a.value, n_a, group_b.value, n_b)
    return sorted(results, key=lambda r: (r.p_value, r.poi_type))
