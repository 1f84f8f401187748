"""Pairwise-distance kernels, energy statistics, kNN structure and kNN recall.

Full pairwise matrices are materialized up to MATERIALIZE_LIMIT rows and
computed blockwise above that, so subsample-scale calls stay fast while
large inputs cannot exhaust memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedio import EmbeddingSet
from .errors import DimError, IndexPairingError, KTooLarge

MATERIALIZE_LIMIT = 4096
_BLOCK_ENTRIES = 8_000_000  # ~64 MB of float64 per block


@dataclass(frozen=True)
class DistanceMatrix:
    """Euclidean distances between a row set and a column set."""

    values: np.ndarray
    row_name: str = ""
    col_name: str = ""

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_self(self) -> bool:
        return self.row_name == self.col_name and self.values.shape[0] == self.values.shape[1]


@dataclass(frozen=True)
class NeighborIndex:
    """Per-row k nearest columns, sorted by ascending distance (ties: lower index)."""

    k: int
    indices: np.ndarray
    distances: np.ndarray


def _block_rows(n_cols: int) -> int:
    return max(1, _BLOCK_ENTRIES // max(1, n_cols))


def _sq_dists(A: np.ndarray, B: np.ndarray, sq_a: np.ndarray, sq_b: np.ndarray) -> np.ndarray:
    D = sq_a[:, None] + sq_b[None, :] - 2.0 * (A @ B.T)
    np.maximum(D, 0.0, out=D)
    return D


def pairwise_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Dense n x m Euclidean distance matrix, computed in row blocks."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq_a = np.einsum("ij,ij->i", A, A)
    sq_b = sq_a if B is A else np.einsum("ij,ij->i", B, B)
    out = np.empty((A.shape[0], B.shape[0]))
    step = _block_rows(B.shape[0])
    for lo in range(0, A.shape[0], step):
        hi = min(lo + step, A.shape[0])
        blk = _sq_dists(A[lo:hi], B, sq_a[lo:hi], sq_b)
        np.sqrt(blk, out=blk)
        out[lo:hi] = blk
    if B is A:
        out = 0.5 * (out + out.T)
        np.fill_diagonal(out, 0.0)
    return out


def pairwise_euclidean(a: EmbeddingSet, b: EmbeddingSet) -> DistanceMatrix:
    """Entry (i, j) = ||a_i - b_j||_2."""
    if a.d != b.d:
        raise DimError(f"dimension mismatch: {a.d} vs {b.d}")
    same = a.data is b.data
    values = pairwise_matrix(a.data, a.data if same else b.data)
    return DistanceMatrix(values, row_name=a.name, col_name=a.name if same else b.name)


def knn(dist: DistanceMatrix, k: int, exclude_self: bool = False) -> NeighborIndex:
    """Per row the k smallest-distance columns; ties broken by lower column index."""
    values = dist.values
    n, m = values.shape
    avail = m - (1 if exclude_self else 0)
    if not 1 <= k <= avail:
        raise KTooLarge(f"k={k} but only {avail} candidate columns")
    if exclude_self:
        if n != m:
            raise KTooLarge("exclude_self requires a square self-distance matrix")
        values = values.copy()
        np.fill_diagonal(values, np.inf)
    order = np.argsort(values, axis=1, kind="stable")[:, :k]
    return NeighborIndex(k, order, np.take_along_axis(values, order, axis=1))


def mean_distance(M: np.ndarray) -> float:
    """Plain mean of a distance matrix (V-statistic when M is a self matrix)."""
    return float(M.mean())


def knn_mean_rows(M: np.ndarray, k: int) -> float:
    """Mean over rows of the mean distance to the k nearest columns."""
    part = np.partition(M, k - 1, axis=1)[:, :k]
    return float(part.mean())


def _canonical_pair(x: EmbeddingSet, y: EmbeddingSet):
    """Deterministic argument order so symmetric statistics are exactly
    symmetric (float summation order would otherwise differ between
    f(x, y) and f(y, x))."""
    if x.n != y.n:
        return (x, y) if x.n < y.n else (y, x)
    if x.data.tobytes() <= y.data.tobytes():
        return x, y
    return y, x


def energy_statistic(x: EmbeddingSet, y: EmbeddingSet) -> float:
    """Squared energy distance E^2 = 2*cross-mean - within-mean(x) - within-mean(y).

    Within-set means are V-statistics over all n^2 ordered pairs (self pairs
    included), which makes E^2(x, x) exactly 0.
    """
    if x.d != y.d:
        raise DimError(f"dimension mismatch: {x.d} vs {y.d}")
    x, y = _canonical_pair(x, y)
    return energy_from_matrices(
        pairwise_matrix(x.data, y.data),
        pairwise_matrix(x.data, x.data),
        pairwise_matrix(y.data, y.data),
    )


def energy_from_matrices(dxy: np.ndarray, dxx: np.ndarray, dyy: np.ndarray) -> float:
    return 2.0 * mean_distance(dxy) - mean_distance(dxx) - mean_distance(dyy)


def local_energy_statistic(
    x: EmbeddingSet,
    y: EmbeddingSet,
    k: int = 5,
    all_terms_local: bool = False,
) -> float:
    """Energy statistic with cross-set means restricted to k-nearest neighborhoods.

    The subtracted within-set terms stay full V-statistics by default; with
    all_terms_local they are restricted to each point's k nearest in its own
    set as well (self pairs included). As k approaches the dataset size the
    statistic converges to energy_statistic.
    """
    if x.d != y.d:
        raise DimError(f"dimension mismatch: {x.d} vs {y.d}")
    if not 1 <= k <= min(x.n, y.n):
        raise KTooLarge(f"k={k} but sets have {x.n} and {y.n} points")
    return local_energy_from_matrices(
        pairwise_matrix(x.data, y.data),
        pairwise_matrix(x.data, x.data),
        pairwise_matrix(y.data, y.data),
        k,
        all_terms_local,
    )


def local_energy_from_matrices(
    dxy: np.ndarray,
    dxx: np.ndarray,
    dyy: np.ndarray,
    k: int,
    all_terms_local: bool = False,
) -> float:
    cross = knn_mean_rows(dxy, k) + knn_mean_rows(dxy.T, k)
    if all_terms_local:
        within = knn_mean_rows(dxx, k) + knn_mean_rows(dyy, k)
    else:
        within = mean_distance(dxx) + mean_distance(dyy)
    return cross - within


def _knn_indices_points(X: np.ndarray, k: int) -> np.ndarray:
    """Self-excluded kNN indices of every point within one point set.

    Ties resolve to the lower index. Uses stable full sorts at small n and a
    partition-plus-sort window above MATERIALIZE_LIMIT.
    """
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    out = np.empty((n, k), dtype=np.int64)
    step = _block_rows(n)
    window = min(n - 1, max(2 * k, k + 16))
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        blk = _sq_dists(X[lo:hi], X, sq[lo:hi], sq)
        rows = np.arange(lo, hi)
        blk[rows - lo, rows] = np.inf
        if n <= MATERIALIZE_LIMIT:
            out[lo:hi] = np.argsort(blk, axis=1, kind="stable")[:, :k]
        else:
            cand = np.argpartition(blk, window - 1, axis=1)[:, :window]
            cvals = np.take_along_axis(blk, cand, axis=1)
            csort = np.lexsort((cand, cvals), axis=1)[:, :k]
            out[lo:hi] = np.take_along_axis(cand, csort, axis=1)
    return out


def knn_recall(reference: EmbeddingSet, evaluation: EmbeddingSet, k: int = 10) -> float:
    """Mean preserved fraction of each point's k nearest neighbors.

    Point i of evaluation must be the transformed point i of reference; both
    neighborhoods exclude the point itself.
    """
    if reference.n != evaluation.n:
        raise IndexPairingError(
            f"sets must be index-paired: {reference.n} vs {evaluation.n} points"
        )
    n = reference.n
    if not 1 <= k < n:
        raise KTooLarge(f"k={k} requires 1 <= k < n={n}")
    ref_nn = _knn_indices_points(reference.data, k)
    ev_nn = _knn_indices_points(evaluation.data, k)
    ref_sorted = np.sort(ref_nn, axis=1)
    ev_sorted = np.sort(ev_nn, axis=1)
    overlap = 0
    for i in range(n):
        overlap += np.intersect1d(ref_sorted[i], ev_sorted[i], assume_unique=True).size
    return overlap / (n * k)
