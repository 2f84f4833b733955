import numpy as np
import pytest

from hotspot_cli.grid import GridSpec
from hotspot_cli.weights import contiguity_weights, include_self, row_standardize


def checkerboard(n_rows, n_cols):
    """+1 / -1 alternating field, row-major."""
    rows, cols = np.divmod(np.arange(n_rows * n_cols), n_cols)
    return np.where((rows + cols) % 2 == 0, 1.0, -1.0)


def write_csv(path, header, rows):
    lines = [header] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def grid_5x5():
    return GridSpec(origin_x=0.0, origin_y=0.0, cell_size=100.0, n_rows=5, n_cols=5)


@pytest.fixture
def queen_5x5(grid_5x5):
    return contiguity_weights(grid_5x5, "queen")


@pytest.fixture
def queen_row_5x5(queen_5x5):
    return row_standardize(queen_5x5)


@pytest.fixture
def queen_star_5x5(queen_5x5):
    return include_self(queen_5x5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
