"""Condensed distance matrices and term-term angular distances."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .docterm import SparseDocTermMatrix


class ZeroVectorError(ValueError):
    pass


@dataclass
class CondensedDistanceMatrix:
    """Upper triangle of a symmetric distance matrix in row-major order.

    ``labels`` names the points: term ranks in term mode, author ids in author mode.
    """

    n: int
    values: np.ndarray
    label: str
    labels: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.n * (self.n - 1) // 2,):
            raise ValueError("condensed length does not match n(n-1)/2")
        if len(self.labels) != self.n:
            raise ValueError("one label per point is required")
        if self.values.size and self.values.min() < 0:
            raise ValueError("distances must be non-negative")

    def index(self, i: int, j: int) -> int:
        if i == j:
            raise IndexError("diagonal is not stored")
        if i > j:
            i, j = j, i
        return self.n * i - i * (i + 1) // 2 + (j - i - 1)

    def __getitem__(self, ij) -> float:
        i, j = ij
        return 0.0 if i == j else float(self.values[self.index(i, j)])

    def row(self, i: int) -> np.ndarray:
        """Distances from point ``i`` to every point (0 on the diagonal)."""
        n = self.n
        out = np.zeros(n)
        if i > 0:
            js = np.arange(i)
            out[:i] = self.values[n * js - js * (js + 1) // 2 + (i - js - 1)]
        start = n * i - i * (i + 1) // 2
        out[i + 1:] = self.values[start:start + n - i - 1]
        return out

    def square(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        out[iu] = self.values
        out.T[iu] = self.values
        return out

    @classmethod
    def from_square(cls, D: np.ndarray, label: str, labels: Sequence) -> "CondensedDistanceMatrix":
        D = np.asarray(D, dtype=float)
        return cls(D.shape[0], D[np.triu_indices(D.shape[0], 1)], label, list(labels))

    def write_binary(self, path: str | Path) -> None:
        """Little-endian float64 values plus a ``<path>.json`` header."""
        path = Path(path)
        path.write_bytes(self.values.astype("<f8").tobytes())
        header = {"n": self.n, "label": self.label, "labels": self.labels, "dtype": "<f8",
                  "order": "condensed-upper-row-major"}
        Path(str(path) + ".json").write_text(json.dumps(header, ensure_ascii=False) + "\n",
                                             encoding="utf-8")

    @classmethod
    def read_binary(cls, path: str | Path) -> "CondensedDistanceMatrix":
        path = Path(path)
        header = json.loads(Path(str(path) + ".json").read_text(encoding="utf-8"))
        values = np.frombuffer(path.read_bytes(), dtype="<f8").astype(np.float64)
        return cls(header["n"], values, header["label"], header["labels"])

    def write_csv(self, path: str | Path) -> None:
        D = self.square()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([""] + [str(x) for x in self.labels])
            for lab, row in zip(self.labels, D):
                w.writerow([lab] + [repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path: str | Path, label: str = "author") -> "CondensedDistanceMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        labels = rows[0][1:]
        D = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        return cls.from_square(D, label, labels)


def angular_distance(x, y) -> float:
    """Angle in radians between two nonzero vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xx, yy = float(x @ x), float(y @ y)
    if xx == 0 or yy == 0:
        raise ZeroVectorError("term absent from all documents")
    # sqrt of the product keeps cos exactly 1 for identical integer vectors
    return math.acos(min(1.0, max(-1.0, float(x @ y) / math.sqrt(xx * yy))))


def pairwise_term_distances(X: SparseDocTermMatrix, block: int = 512) -> CondensedDistanceMatrix:
    """Angular distance between every pair of term columns of a binary matrix.

    Dot products are co-occurrence counts from the sparse Gram matrix; columns
    that are empty (every containing document was dropped) are excluded.
    """
    M = X.to_csr().tocsc()
    col_counts = np.diff(M.indptr)
    present = np.flatnonzero(col_counts)
    if present.size < X.n_terms:
        missing = [int(j) + 1 for j in np.flatnonzero(col_counts == 0)]
        warnings.warn(f"{len(missing)} terms absent from all documents excluded: ranks {missing[:10]}",
                      stacklevel=2)
    M = M[:, present]
    gram = (M.T @ M).tocsr()
    counts = col_counts[present].astype(float)
    n = present.size
    values = np.empty(n * (n - 1) // 2)
    for start in range(0, n, block):
        stop = min(n, start + block)
        dense = gram[start:stop].toarray()
        cos = dense / np.sqrt(np.outer(counts[start:stop], counts))
        np.clip(cos, -1.0, 1.0, out=cos)
        phi = np.arccos(cos)
        for r in range(start, stop):
            off = n * r - r * (r + 1) // 2
            values[off:off + n - r - 1] = phi[r - start, r + 1:]
    return CondensedDistanceMatrix(n, values, "term", [int(j) + 1 for j in present])
