"""
Uniform square grid over a planar study region and point-to-cell aggregation.

Cells are half-open squares [x_lo, x_hi) x [y_lo, y_hi), so every point inside the grid
extent belongs to exactly one cell. Coordinates are planar meters; reprojection is a
preprocessing step outside this package.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from hotspot_cli.errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_CELL_SIZE = 400.0

Ring = List[Tuple[float, float]]


@dataclass(frozen=True)
class GridSpec:
    """Uniform tessellation anchored at its lower-left corner."""

    origin_x: float
    origin_y: float
    cell_size: float
    n_rows: int
    n_cols: int

    def __post_init__(self):
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise ValidationError(f"cell_size must be positive, got {self.cell_size}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValidationError(f"grid needs at least one row and column, got {self.n_rows}x{self.n_cols}")

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) of the covered area; max edges are exclusive."""
        return (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.n_cols * self.cell_size,
            self.origin_y + self.n_rows * self.cell_size,
        )

    def cell_id(self, row: int, col: int) -> int:
        return row * self.n_cols + col

    def row_col(self, cell_id: int) -> Tuple[int, int]:
        return divmod(cell_id, self.n_cols)

    def cell_bounds(self, cell_id: int) -> Tuple[float, float, float, float]:
        """Return (x_lo, y_lo, x_hi, y_hi) of a cell."""
        row, col = self.row_col(cell_id)
        s = self.cell_size
        return (
            self.origin_x + col * s,
            self.origin_y + row * s,
            self.origin_x + (col + 1) * s,
            self.origin_y + (row + 1) * s,
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "cell_size": self.cell_size,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "GridSpec":
        try:
            return cls(
                origin_x=float(data["origin_x"]),
                origin_y=float(data["origin_y"]),
                cell_size=float(data["cell_size"]),
                n_rows=int(data["n_rows"]),
                n_cols=int(data["n_cols"]),
            )
        except KeyError as e:
            raise ValidationError(f"grid description is missing field {e}")


@dataclass(frozen=True)
class EventPoint:
    """A point observation (crash, high-G event or POI) in planar meters."""

    x: float
    y: float
    kind: Optional[str] = None

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass
class CellVariable:
    """
    One value per grid cell.

    `dropped` records how many input points fell outside the grid when the variable came
    from aggregation; it is 0 for variables built any other way.
    """

    name: str
    values: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValidationError(f"{self.name}: cell values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError(f"{self.name}: cell values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def check_grid(self, g: GridSpec) -> None:
        if len(self.values) != g.n_cells:
            raise ValidationError(
                f"{self.name} has {len(self.values)} values but the grid has {g.n_cells} cells"
            )

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def summary_line(self) -> str:
        """Grid summary line: total cells, in-extent points, dropped points."""
        return (
            f"{self.name}: {len(self.values)} cells, "
            f"{int(round(self.total))} in-extent points, {self.dropped} dropped"
        )


def make_grid(bbox: Sequence[float], cell_size: float = DEFAULT_CELL_SIZE) -> GridSpec:
    """
    Build the grid that covers a bounding box, anchored at its lower-left corner.

    Args:
        bbox: (min_x, min_y, max_x, max_y) in meters
        cell_size: Cell edge length in meters

    Returns:
        GridSpec with ceil(width / cell_size) columns and ceil(height / cell_size) rows

    Raises:
        ValidationError: If the bbox is degenerate or the cell size is not positive
    """
    if len(bbox) != 4:
        raise ValidationError(f"bbox needs 4 numbers (min_x, min_y, max_x, max_y), got {len(bbox)}")
    min_x, min_y, max_x, max_y = (float(v) for v in bbox)
    if not all(math.isfinite(v) for v in (min_x, min_y, max_x, max_y)):
        raise ValidationError("bbox coordinates must be finite")
    if not max_x > min_x or not max_y > min_y:
        raise ValidationError(f"degenerate bbox {tuple(bbox)}: max must exceed min on both axes")
    if not (cell_size > 0 and math.isfinite(cell_size)):
        raise ValidationError(f"cell_size must be positive, got {cell_size}")

    n_cols = math.ceil((max_x - min_x) / cell_size)
    n_rows = math.ceil((max_y - min_y) / cell_size)
    return GridSpec(origin_x=min_x, origin_y=min_y, cell_size=float(cell_size), n_rows=n_rows, n_cols=n_cols)


def bbox_covering(xs: np.ndarray, ys: np.ndarray, cell_size: float) -> Tuple[float, float, float, float]:
    """
    Bounding box of a point set whose max edges sit on the first cell boundary strictly
    beyond the largest coordinate, so no point is lost to the half-open rule.
    """
    if len(xs) == 0:
        raise ValidationError("cannot derive a bbox from an empty point set; pass --bbox")
    min_x, min_y = float(np.min(xs)), float(np.min(ys))
    n_cols = math.floor((float(np.max(xs)) - min_x) / cell_size) + 1
    n_rows = math.floor((float(np.max(ys)) - min_y) / cell_size) + 1
    return (min_x, min_y, min_x + n_cols * cell_size, min_y + n_rows * cell_size)


def _axis_index(coord: np.ndarray, origin: float, size: float) -> np.ndarray:
    """Half-open bin index along one axis, consistent with origin + k * size edges."""
    idx = np.floor((coord - origin) / size)
    # Division can land one bin off near an edge; reconcile against the edges themselves.
    idx = np.where(coord < origin + idx * size, idx - 1, idx)
    idx = np.where(coord >= origin + (idx + 1) * size, idx + 1, idx)
    return idx


def locate_many(xs: Iterable[float], ys: Iterable[float], g: GridSpec) -> np.ndarray:
    """Vectorized locate: cell ids, with -1 for points outside the grid extent."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0:
        return np.empty(0, dtype=np.int64)
    cols = _axis_index(xs, g.origin_x, g.cell_size)
    rows = _axis_index(ys, g.origin_y, g.cell_size)
    inside = (cols >= 0) & (cols < g.n_cols) & (rows >= 0) & (rows < g.n_rows)
    ids = np.full(xs.shape, -1, dtype=np.int64)
    ids[inside] = rows[inside].astype(np.int64) * g.n_cols + cols[inside].astype(np.int64)
    return ids


def locate(p: EventPoint, g: GridSpec) -> Optional[int]:
    """Return the id of the cell containing `p`, or None if it lies outside the grid."""
    cell = int(locate_many([p.x], [p.y], g)[0])
    return None if cell < 0 else cell


def _bincount_shards(ids: np.ndarray, n_cells: int, threads: int) -> np.ndarray:
    if threads <= 1 or len(ids) < 2 * threads:
        return np.bincount(ids, minlength=n_cells)
    shards = np.array_split(ids, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        partials = list(pool.map(lambda s: np.bincount(s, minlength=n_cells), shards))
    # Integer sums, so the result does not depend on how points were sharded.
    return np.sum(partials, axis=0)


def aggregate_xy(
    xs: np.ndarray, ys: np.ndarray, g: GridSpec, name: str = "count", threads: int = 1
) -> CellVariable:
    """Aggregate coordinate arrays into per-cell counts."""
    ids = locate_many(xs, ys, g)
    inside = ids[ids >= 0]
    counts = _bincount_shards(inside, g.n_cells, threads)
    dropped = int(len(ids) - len(inside))
    if dropped:
        logger.info("%s: %d points outside the grid extent were dropped", name, dropped)
    return CellVariable(name=name, values=counts.astype(float), dropped=dropped)


def aggregate_points(
    points: Sequence[EventPoint], g: GridSpec, name: str = "count", threads: int = 1
) -> CellVariable:
    """
    Count points per cell.

    Args:
        points: Event points in planar meters
        g: Grid to aggregate onto
        name: Label of the resulting variable
        threads: Number of shards counted in parallel

    Returns:
        CellVariable whose values sum to the number of in-extent points
    """
    xs = np.fromiter((p.x for p in points), dtype=float, count=len(points))
    ys = np.fromiter((p.y for p in points), dtype=float, count=len(points))
    return aggregate_xy(xs, ys, g, name=name, threads=threads)


def cell_ring(g: GridSpec, cell_id: int) -> Ring:
    """Closed counter-clockwise ring of one cell, starting at its lower-left corner."""
    x_lo, y_lo, x_hi, y_hi = g.cell_bounds(cell_id)
    return [(x_lo, y_lo), (x_hi, y_lo), (x_hi, y_hi), (x_lo, y_hi), (x_lo, y_lo)]


def grid_polygons(g: GridSpec) -> Dict[int, Ring]:
    """One closed counter-clockwise 5-vertex ring per cell, keyed by cell id."""
    return {cell_id: cell_ring(g, cell_id) for cell_id in range(g.n_cells)}
