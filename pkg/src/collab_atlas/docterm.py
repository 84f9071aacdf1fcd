"""Binary sparse document-term matrix and checksum-based row deduplication."""

from __future__ import annotations

import csv
import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .text import TermList
from .vocab import Vocabulary


@dataclass
class SparseDocTermMatrix:
    """Presence triplets ``(doc_index, term_rank, 1)``.

    ``rows`` maps each retained document to its sorted tuple of 1-based term
    ranks; documents without any retained term are simply absent.
    """

    n_docs: int
    n_terms: int
    rows: dict[int, tuple[int, ...]]
    doc_author: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for d, ranks in self.rows.items():
            if not 0 <= d < self.n_docs:
                raise ValueError(f"doc_index {d} out of range")
            if ranks and (ranks[0] < 1 or ranks[-1] > self.n_terms):
                raise ValueError(f"term rank out of range in doc {d}")

    @property
    def doc_indices(self) -> list[int]:
        return sorted(self.rows)

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def triplets(self) -> Iterable[tuple[int, int, int]]:
        for d in self.doc_indices:
            for j in self.rows[d]:
                yield d, j, 1

    def to_csr(self) -> sp.csr_matrix:
        """Rows follow ``doc_indices`` order; column ``j-1`` holds rank ``j``."""
        docs = self.doc_indices
        indptr = np.zeros(len(docs) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(self.rows[d]) for d in docs])
        indices = np.fromiter((j - 1 for d in docs for j in self.rows[d]), dtype=np.int64,
                              count=int(indptr[-1]))
        data = np.ones(indices.size, dtype=np.float64)
        return sp.csr_matrix((data, indices, indptr), shape=(len(docs), self.n_terms))

    def subset(self, keep: Iterable[int]) -> "SparseDocTermMatrix":
        keep = set(keep)
        return SparseDocTermMatrix(
            self.n_docs, self.n_terms,
            {d: r for d, r in self.rows.items() if d in keep},
            {d: a for d, a in self.doc_author.items() if d in keep},
        )

    def write(self, csv_path: str | Path, sidecar_path: str | Path,
              record_ids: Sequence[str] | None = None) -> None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["doc", "term_rank", "value"])
            w.writerows(self.triplets())
        docs = {
            str(d): {"record_id": record_ids[d] if record_ids is not None else None,
                     "author_id": self.doc_author.get(d)}
            for d in self.doc_indices
        }
        meta = {"n_docs": self.n_docs, "n_terms": self.n_terms, "docs": docs}
        Path(sidecar_path).write_text(json.dumps(meta, indent=1, ensure_ascii=False) + "\n",
                                      encoding="utf-8")

    @classmethod
    def read(cls, csv_path: str | Path, sidecar_path: str | Path) -> "SparseDocTermMatrix":
        meta = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        rows: dict[int, list[int]] = defaultdict(list)
        with open(csv_path, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows[int(rec["doc"])].append(int(rec["term_rank"]))
        doc_author = {int(d): v["author_id"] for d, v in meta["docs"].items()}
        return cls(meta["n_docs"], meta["n_terms"],
                   {d: tuple(sorted(r)) for d, r in rows.items()}, doc_author)


@dataclass
class DedupReport:
    dropped_rows: list[int]
    kept_representative: dict[int, int]
    fraction_dropped: float


def build_matrix(docs: Sequence[TermList], vocab: Vocabulary,
                 doc_author: dict[int, str] | None = None) -> SparseDocTermMatrix:
    """Binarize documents over the (already truncated) vocabulary."""
    if len(vocab) == 0:
        raise ValueError("truncated vocabulary is empty")
    n_docs = max((d.doc_index for d in docs), default=-1) + 1
    rows: dict[int, tuple[int, ...]] = {}
    empty = []
    for d in docs:
        ranks = {vocab.get_rank(t) for t in d.terms} - {None}
        if ranks:
            rows[d.doc_index] = tuple(sorted(ranks))
        else:
            empty.append(d.doc_index)
    if empty:
        warnings.warn(f"{len(empty)} documents have no terms in the vocabulary and were dropped",
                      stacklevel=2)
    doc_author = doc_author or {}
    return SparseDocTermMatrix(n_docs, len(vocab), rows,
                               {d: doc_author[d] for d in rows if d in doc_author})


def row_checksum(ranks: Iterable[int]) -> int:
    """Sum of the 1-based ranks present in a row (Python ints never overflow)."""
    return int(sum(ranks))


def dedupe_rows(X: SparseDocTermMatrix) -> tuple[SparseDocTermMatrix, DedupReport]:
    """Drop rows whose term set duplicates an earlier row.

    Rows are bucketed by checksum and only compared within a bucket; the lowest
    doc_index of each set of identical rows is kept.
    """
    buckets: dict[int, list[int]] = defaultdict(list)
    for d in X.doc_indices:
        buckets[row_checksum(X.rows[d])].append(d)
    mapping: dict[int, int] = {}
    for members in buckets.values():
        if len(members) < 2:
            continue
        reps: list[int] = []
        for d in members:
            for r in reps:
                if X.rows[r] == X.rows[d]:
                    mapping[d] = r
                    break
            else:
                reps.append(d)
    dropped = sorted(mapping)
    kept = X.subset(d for d in X.rows if d not in mapping)
    frac = len(dropped) / len(X.rows) if X.rows else 0.0
    return kept, DedupReport(dropped, {d: mapping[d] for d in dropped}, frac)
