"""
Sparse spatial weights between grid cells.

Weights are stored as a scipy CSR matrix with sorted column indices, so row i lists the
neighbors of cell i in ascending order. Matrices are immutable once built; transforms
return new instances.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse

from hotspot_cli.errors import InputParseError, ValidationError
from hotspot_cli.grid import GridSpec

logger = logging.getLogger(__name__)

ROOK_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))
QUEEN_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class Contiguity(str, Enum):
    QUEEN = "queen"
    ROOK = "rook"


class Standardization(str, Enum):
    BINARY = "binary"
    ROW = "row_standardized"


@dataclass(frozen=True)
class WeightsMatrix:
    """Neighbor structure over n cells."""

    matrix: sparse.csr_matrix
    standardization: Standardization = Standardization.BINARY
    self_included: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def cardinalities(self) -> np.ndarray:
        """Number of neighbors per cell, self excluded."""
        counts = np.diff(self.matrix.indptr)
        if self.self_included:
            counts = counts - (self.matrix.diagonal() > 0)
        return counts

    @property
    def isolates(self) -> np.ndarray:
        """Boolean mask of cells with no neighbor other than themselves."""
        return self.cardinalities == 0

    @property
    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def neighbors(self, i: int) -> List[Tuple[int, float]]:
        """Sorted (j, w_ij) pairs of row i."""
        start, end = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return list(zip(self.matrix.indices[start:end].tolist(), self.matrix.data[start:end].tolist()))

    def row(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """(neighbor ids, weights) of row i as arrays; no copies."""
        start, end = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[start:end], self.matrix.data[start:end]

    def lag(self, values: np.ndarray) -> np.ndarray:
        """Spatial lag W @ values."""
        return self.matrix @ values

    def is_symmetric(self) -> bool:
        pattern = (self.matrix != 0).astype(np.int8)
        return (pattern != pattern.T).nnz == 0


def _contiguity(g: GridSpec, offsets) -> WeightsMatrix:
    rows, cols = np.divmod(np.arange(g.n_cells), g.n_cols)
    src, dst = [], []
    for dr, dc in offsets:
        r2, c2 = rows + dr, cols + dc
        ok = (r2 >= 0) & (r2 < g.n_rows) & (c2 >= 0) & (c2 < g.n_cols)
        src.append(np.flatnonzero(ok))
        dst.append(r2[ok] * g.n_cols + c2[ok])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    matrix = sparse.csr_matrix((np.ones(len(src)), (src, dst)), shape=(g.n_cells, g.n_cells))
    matrix.sort_indices()
    return WeightsMatrix(matrix=matrix)


def queen_weights(g: GridSpec) -> WeightsMatrix:
    """Binary weights over cells sharing an edge or a corner (up to 8 neighbors)."""
    return _contiguity(g, QUEEN_OFFSETS)


def rook_weights(g: GridSpec) -> WeightsMatrix:
    """Binary weights over cells sharing an edge (up to 4 neighbors)."""
    return _contiguity(g, ROOK_OFFSETS)


def contiguity_weights(g: GridSpec, kind: Union[str, Contiguity] = Contiguity.QUEEN) -> WeightsMatrix:
    try:
        kind = Contiguity(kind)
    except ValueError:
        raise ValidationError(f"unknown contiguity {kind!r}; choose queen or rook")
    return queen_weights(g) if kind is Contiguity.QUEEN else rook_weights(g)


def row_standardize(W: WeightsMatrix) -> WeightsMatrix:
    """
    Scale every nonempty row to sum 1.

    Rows of isolated cells stay empty; they are reported through `WeightsMatrix.isolates`.
    Applying the transform to already row-standardized weights leaves them unchanged.
    """
    sums = W.row_sums
    scale = np.zeros_like(sums)
    nonempty = sums > 0
    scale[nonempty] = 1.0 / sums[nonempty]
    matrix = sparse.diags(scale) @ W.matrix
    matrix = sparse.csr_matrix(matrix)
    matrix.sort_indices()
    n_isolates = int(W.isolates.sum())
    if n_isolates:
        logger.warning("%d isolated cells have no neighbors and are excluded from local statistics", n_isolates)
    return WeightsMatrix(matrix=matrix, standardization=Standardization.ROW, self_included=W.self_included)


def include_self(W: WeightsMatrix) -> WeightsMatrix:
    """
    Add w_ii = 1 to every row of a binary matrix (the starred neighborhood of Gi*).

    Raises:
        ValidationError: If W already includes self-weights or is not binary
    """
    if W.self_included:
        raise ValidationError("weights already include self-neighbors")
    if W.standardization is not Standardization.BINARY:
        raise ValidationError("self-inclusion needs binary weights")
    matrix = sparse.csr_matrix(W.matrix + sparse.identity(W.n, format="csr"))
    matrix.sort_indices()
    return WeightsMatrix(matrix=matrix, standardization=Standardization.BINARY, self_included=True)


def to_frame(W: WeightsMatrix) -> pd.DataFrame:
    coo = W.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return pd.DataFrame({"i": coo.row[order], "j": coo.col[order], "w": coo.data[order]})


def write_weights_csv(W: WeightsMatrix, path: Union[str, Path]) -> None:
    """Export adjacency as `i,j,w` rows."""
    to_frame(W).to_csv(path, index=False)


def read_weights_csv(path: Union[str, Path], n: int) -> WeightsMatrix:
    """
    Import binary contiguity weights written by `write_weights_csv`.

    Args:
        path: CSV file with columns i, j, w
        n: Number of cells of the grid the weights belong to

    Returns:
        Binary WeightsMatrix without self-weights
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise InputParseError(path, None, f"cannot read weights: {e}")
    missing = {"i", "j", "w"} - set(frame.columns)
    if missing:
        raise InputParseError(path, 1, f"missing columns {sorted(missing)}")
    for col in ("i", "j", "w"):
        frame[col] = pd.to_numeric(frame[col], errors="coerce")
    for col in ("i", "j"):
        bad = ~frame[col].between(0, n - 1) | (frame[col] % 1 != 0)
        if bad.any():
            line = int(np.flatnonzero(bad.to_numpy())[0]) + 2
            raise InputParseError(path, line, f"{col} is not a cell id in [0, {n})")
    frame[["i", "j"]] = frame[["i", "j"]].astype(np.int64)
    if (frame["i"] == frame["j"]).any():
        line = int(np.flatnonzero((frame["i"] == frame["j"]).to_numpy())[0]) + 2
        raise InputParseError(path, line, "self-weights are added by the statistic, not stored")
    if not np.allclose(frame["w"].to_numpy(), 1.0):
        raise InputParseError(path, None, "only binary weights can be imported")
    matrix = sparse.csr_matrix(
        (np.ones(len(frame)), (frame["i"].to_numpy(), frame["j"].to_numpy())), shape=(n, n)
    )
    matrix.sum_duplicates()
    matrix.data[:] = 1.0
    matrix.sort_indices()
    return WeightsMatrix(matrix=matrix)
