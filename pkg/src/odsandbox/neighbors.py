"""Exact brute-force k-nearest-neighbour index."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

# above this dimensionality the Gram-matrix route is much faster than cdist
_GRAM_MIN_DIMS = 64


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] < _GRAM_MIN_DIMS:
        return cdist(X, X)
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


class KnnIndex:
    """Sorted neighbour lists for every point of ``X`` up to ``max_k``.

    A point is never its own neighbour. Distance ties are ordered by the
    lower row index, so neighbourhoods have exactly ``k`` members.
    """

    def __init__(self, X: np.ndarray, max_k: int | None = None):
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        if n < 2:
            raise ValueError("need at least two points")
        max_k = n - 1 if max_k is None else int(max_k)
        if not 1 <= max_k < n:
            raise ValueError(f"max_k must lie in [1, {n - 1}], got {max_k}")
        dist = pairwise_distances(X)
        np.fill_diagonal(dist, np.inf)
        order = np.argsort(dist, axis=1, kind="stable")[:, :max_k]
        self.n = n
        self.max_k = max_k
        self.indices = order
        self.distances = np.take_along_axis(dist, order, axis=1)

    def query(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """``(indices, distances)`` of the ``k`` nearest neighbours of every point."""
        if not 1 <= k <= self.max_k:
            raise ValueError(f"k must lie in [1, {self.max_k}], got {k}")
        return self.indices[:, :k], self.distances[:, :k]
