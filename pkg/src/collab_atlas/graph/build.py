"""Author graph construction from a distance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import CondensedDistanceMatrix


@dataclass
class AuthorGraph:
    vertices: list[str]
    directed: np.ndarray
    undirected: np.ndarray
    epsilon: float
    k: int

    @property
    def n(self) -> int:
        return len(self.vertices)

    def degrees(self) -> np.ndarray:
        return self.undirected.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(self.undirected, 1))
        return list(zip(iu.tolist(), ju.tolist()))


def epsilon_threshold(W: CondensedDistanceMatrix) -> float:
    """Largest nearest-neighbour distance: the smallest cutoff leaving no vertex isolated."""
    if W.n < 2:
        raise ValueError("need at least two authors")
    D = W.square()
    np.fill_diagonal(D, np.inf)
    return float(D.min(axis=1).max())


def knn_adjacency(W: CondensedDistanceMatrix, epsilon: float, k: int) -> np.ndarray:
    """Directed 0/1 adjacency: edges to the k nearest peers within ``epsilon``.

    The comparison is inclusive (``<= epsilon``) so the vertex that defines
    the threshold keeps its nearest neighbour. Ties at the k-th distance go
    to the peer whose author label sorts first.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = W.n
    D = W.square()
    label_rank = np.empty(n, dtype=np.int64)
    label_rank[np.argsort(np.array([str(v) for v in W.labels]), kind="stable")] = np.arange(n)
    A = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        others = np.array([j for j in range(n) if j != i], dtype=np.int64)
        order = others[np.lexsort((label_rank[others], D[i, others]))]
        for j in order[:k]:
            if D[i, j] <= epsilon:
                A[i, j] = 1
    return A


def symmetrize(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    return np.maximum(A, A.T)


def build_author_graph(W: CondensedDistanceMatrix, k: int = 3,
                       epsilon: float | None = None) -> AuthorGraph:
    eps = epsilon_threshold(W) if epsilon is None else epsilon
    A = knn_adjacency(W, eps, k)
    return AuthorGraph([str(v) for v in W.labels], A, symmetrize(A), eps, k)
