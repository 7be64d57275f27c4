"""All-pairs shortest paths on the min-plus (tropical) semiring.

Distances are computed by repeated matrix squaring of the adjacency matrix:
squaring k times closes paths of up to 2^k edges, so ceil(log2(n-1))
squarings reach every simple path.  Unreachable pairs stay +inf, which is
also how connectivity is read off the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def minplus_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with (+, min) in place of (*, +).

    inf + x stays inf and min(inf, x) = x, so unreachable entries behave as
    the semiring zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need equal square matrices, got {a.shape} and {b.shape}")
    if a.shape[0] == 0:
        return a.copy()
    # [i, k, j] = a[i, k] + b[k, j]; min over k
    return np.min(a[:, :, None] + b[None, :, :], axis=1)


@dataclass(frozen=True)
class DistanceMatrix:
    """Shortest-path closure of an adjacency matrix.

    d[i][j] is the cost of the cheapest path between node ids[i] and ids[j],
    +inf when no path exists.  squarings records how many min-plus squarings
    the computation performed.
    """

    n: int
    d: np.ndarray
    ids: tuple[int, ...]
    squarings: int = 0

    def __post_init__(self):
        if self.d.shape != (self.n, self.n):
            raise ValueError(f"matrix shape {self.d.shape} does not match n={self.n}")
        if len(self.ids) != self.n:
            raise ValueError("index map size does not match n")
        self.d.setflags(write=False)

    def index_of(self, node_id: int) -> int:
        return self.ids.index(node_id)

    def distance(self, a: int, b: int) -> float:
        return float(self.d[self.index_of(a), self.index_of(b)])


def shortest_distances(a: np.ndarray, ids: tuple[int, ...] | None = None) -> DistanceMatrix:
    """Min-plus power A^(n-1) by repeated squaring.

    The result is idempotent under one further squaring (path closure).
    n <= 1 is trivially its own closure.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if ids is None:
        ids = tuple(range(n))
    d = a.copy()
    squarings = 0
    span = 1  # d currently closes paths of up to `span` edges
    while span < n - 1:
        d = minplus_multiply(d, d)
        span *= 2
        squarings += 1
    return DistanceMatrix(n=n, d=d, ids=tuple(ids), squarings=squarings)


def connected_pair_count(dist: DistanceMatrix) -> int:
    """Ordered pairs (i, j), i != j, at finite distance; the diagonal is
    excluded because self-pairs carry no connectivity information."""
    finite = np.isfinite(dist.d)
    np.fill_diagonal(finite, False)
    return int(finite.sum())
