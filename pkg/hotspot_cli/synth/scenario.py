"""
Synthetic event fields with known structure.

Counts per cell are Poisson with intensity baseline * (1 + sum of blob amplitudes over
the blobs whose Chebyshev radius covers the cell). x and y are coupled through a
Gaussian copula: a shared correlation `coupling` between the normal scores that are
mapped to Poisson quantiles, so each marginal keeps its exact Poisson law.
"""

import json
import logging
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from pydantic import ValidationError as PydanticValidationError
from scipy import stats

from hotspot_cli.errors import ValidationError
from hotspot_cli.grid import CellVariable, EventPoint, GridSpec

logger = logging.getLogger(__name__)


class GridModel(BaseModel):
    origin_x: float = 0.0
    origin_y: float = 0.0
    cell_size: float = Field(400.0, gt=0)
    n_rows: int = Field(..., ge=1)
    n_cols: int = Field(..., ge=1)

    def to_spec(self) -> GridSpec:
        return GridSpec(self.origin_x, self.origin_y, self.cell_size, self.n_rows, self.n_cols)


class Blob(BaseModel):
    center_row: int = Field(..., ge=0)
    center_col: int = Field(..., ge=0)
    radius: int = Field(0, ge=0)
    amplitude: float = Field(..., ge=0)


class PoiLayer(BaseModel):
    """POIs of one kind whose intensity optionally follows the x or y field."""

    kind: str
    baseline: float = Field(0.1, ge=0)
    follows: Literal["x", "y", "none"] = "none"


class Scenario(BaseModel):
    grid: GridModel
    baseline_intensity: float = Field(2.0, ge=0)
    blobs: List[Blob] = []
    coupling: float = Field(0.0, ge=-1, le=1)
    seed: int = 42
    y_baseline: Optional[float] = Field(None, ge=0)
    y_blobs: List[Blob] = []
    y_follows_x_blobs: bool = True
    pois: List[PoiLayer] = []

    @model_validator(mode="after")
    def _blobs_on_grid(self) -> "Scenario":
        for blob in self.blobs + self.y_blobs:
            if blob.center_row >= self.grid.n_rows or blob.center_col >= self.grid.n_cols:
                raise ValueError(
                    f"blob center ({blob.center_row}, {blob.center_col}) lies outside the "
                    f"{self.grid.n_rows}x{self.grid.n_cols} grid"
                )
        return self

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        path = Path(path)
        try:
            return cls.model_validate_json(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ValidationError(f"cannot read scenario {path}: {e}")
        except PydanticValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"]) or "scenario"
            raise ValidationError(f"{path}: {where}: {first['msg']}")

    def dump(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.model_dump(), indent=2) + "\n", encoding="utf-8")


def blob_field(g: GridSpec, blobs: List[Blob]) -> np.ndarray:
    """Sum of blob amplitudes covering each cell (Chebyshev distance <= radius)."""
    rows, cols = np.divmod(np.arange(g.n_cells), g.n_cols)
    field = np.zeros(g.n_cells)
    for blob in blobs:
        near = (np.abs(rows - blob.center_row) <= blob.radius) & (np.abs(cols - blob.center_col) <= blob.radius)
        field[near] += blob.amplitude
    return field


def intensities(s: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    """Expected counts per cell for x and y."""
    g = s.grid.to_spec()
    x_blobs = blob_field(g, s.blobs)
    lam_x = s.baseline_intensity * (1.0 + x_blobs)
    y_base = s.baseline_intensity if s.y_baseline is None else s.y_baseline
    y_blobs = blob_field(g, s.y_blobs)
    if s.y_follows_x_blobs:
        y_blobs = y_blobs + x_blobs
    lam_y = y_base * (1.0 + y_blobs)
    return lam_x, lam_y


def _poisson_from_normal(lam: np.ndarray, score: np.ndarray) -> np.ndarray:
    u = stats.norm.cdf(score)
    u = np.clip(u, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    counts = np.zeros_like(lam)
    positive = lam > 0
    counts[positive] = stats.poisson.ppf(u[positive], lam[positive])
    return counts


def gen_counts(s: Scenario) -> Tuple[CellVariable, CellVariable]:
    """
    Draw the (x, y) count fields of a scenario.

    Identical scenarios (seed included) give identical fields.
    """
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, 0]))
    lam_x, lam_y = intensities(s)
    n = len(lam_x)
    score_x = rng.standard_normal(n)
    noise = rng.standard_normal(n)
    rho = s.coupling
    score_y = rho * score_x + np.sqrt(max(0.0, 1.0 - rho * rho)) * noise
    x = _poisson_from_normal(lam_x, score_x)
    y = _poisson_from_normal(lam_y, score_y)
    return CellVariable("crash_count", x), CellVariable("highg_count", y)


def scatter_points(
    counts: CellVariable, g: GridSpec, rng: np.random.Generator, kind: Optional[str] = None
) -> List[EventPoint]:
    """Place count[i] points uniformly inside cell i (strictly inside its square)."""
    cells = np.repeat(np.arange(g.n_cells), counts.values.astype(np.int64))
    rows, cols = np.divmod(cells, g.n_cols)
    # Keep clear of the edges so the points re-aggregate to the same cells.
    u = rng.uniform(0.001, 0.999, size=(len(cells), 2))
    xs = g.origin_x + (cols + u[:, 0]) * g.cell_size
    ys = g.origin_y + (rows + u[:, 1]) * g.cell_size
    return [EventPoint(float(x), float(y), kind) for x, y in zip(xs, ys)]


def gen_points(s: Scenario) -> Tuple[List[EventPoint], List[EventPoint]]:
    """Crash and high-G point sets whose aggregation reproduces `gen_counts(s)`."""
    g = s.grid.to_spec()
    x, y = gen_counts(s)
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, 1]))
    return scatter_points(x, g, rng), scatter_points(y, g, rng)


def gen_pois(s: Scenario) -> List[EventPoint]:
    """POI points of every configured layer."""
    g = s.grid.to_spec()
    lam_x, lam_y = intensities(s)
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, 2]))
    points: List[EventPoint] = []
    for layer in s.pois:
        if layer.follows == "x":
            shape = lam_x / max(s.baseline_intensity, 1e-12)
        elif layer.follows == "y":
            y_base = s.baseline_intensity if s.y_baseline is None else s.y_baseline
            shape = lam_y / max(y_base, 1e-12)
        else:
            shape = np.ones(g.n_cells)
        counts = rng.poisson(layer.baseline * shape).astype(float)
        points.extend(scatter_points(CellVariable(layer.kind, counts), g, rng, kind=layer.kind))
    return points


def _city_scale(seed: int) -> Scenario:
    # 184 x 211 = 38,824 cells.
    blobs = [Blob(center_row=r, center_col=c, radius=rad, amplitude=amp)
             for r, c, rad, amp in ((40, 50, 3, 8.0), (92, 105, 5, 5.0), (150, 170, 2, 12.0), (120, 30, 4, 6.0))]
    y_blobs = [Blob(center_row=30, center_col=180, radius=4, amplitude=8.0),
               Blob(center_row=160, center_col=60, radius=3, amplitude=8.0)]
    return Scenario(
        grid=GridModel(n_rows=184, n_cols=211),
        baseline_intensity=0.5,
        blobs=blobs,
        y_blobs=y_blobs,
        coupling=0.3,
        seed=seed,
        pois=[PoiLayer(kind="school", baseline=0.05, follows="x"),
              PoiLayer(kind="fuel_station", baseline=0.05, follows="y"),
              PoiLayer(kind="park", baseline=0.05)],
    )


def preset(name: str, seed: int = 42) -> Scenario:
    """
    Built-in scenarios.

    null: 30x30 iid Poisson(2) fields. hotspot: 50x50 with one amplitude-20 blob of
    radius 2 in the middle. discordant: 40x40 with a shared blob and a high-G-only blob,
    plus POI layers following each field. city-scale: a 184x211 grid with several blobs.
    """
    if name == "null":
        return Scenario(grid=GridModel(n_rows=30, n_cols=30), baseline_intensity=2.0, seed=seed)
    if name == "hotspot":
        return Scenario(
            grid=GridModel(n_rows=50, n_cols=50),
            baseline_intensity=2.0,
            blobs=[Blob(center_row=25, center_col=25, radius=2, amplitude=20.0)],
            seed=seed,
        )
    if name == "discordant":
        return Scenario(
            grid=GridModel(n_rows=40, n_cols=40),
            baseline_intensity=2.0,
            blobs=[Blob(center_row=10, center_col=10, radius=3, amplitude=6.0)],
            y_blobs=[Blob(center_row=29, center_col=29, radius=3, amplitude=6.0)],
            seed=seed,
            pois=[PoiLayer(kind="school", baseline=0.4, follows="x"),
                  PoiLayer(kind="fuel_station", baseline=0.4, follows="y"),
                  PoiLayer(kind="park", baseline=0.3)],
        )
    if name == "city-scale":
        return _city_scale(seed)
    raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = ("null", "hotspot", "discordant", "city-scale")
