"""Global vocabulary ranking and per-author term-frequency profiles."""

from __future__ import annotations

import csv
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .biblio import Corpus
from .text import TermList


class EmptyCorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Terms sorted by decreasing global count, ties broken lexicographically.

    A term's rank (1-based position) is its identity in every later stage.
    """

    terms: tuple[str, ...]
    counts: tuple[int, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.terms) != len(self.counts):
            raise ValueError("terms and counts differ in length")
        object.__setattr__(self, "_index", {t: i + 1 for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def rank(self, term: str) -> int:
        return self._index[term]

    def get_rank(self, term: str) -> int | None:
        return self._index.get(term)

    def term(self, rank: int) -> str:
        return self.terms[rank - 1]

    def count(self, term: str) -> int:
        return self.counts[self._index[term] - 1]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def truncate(self, n: int) -> "Vocabulary":
        return Vocabulary(self.terms[:n], self.counts[:n])

    def coverage(self, n: int) -> float:
        """Fraction of all term occurrences covered by the top ``n`` terms."""
        total = self.total
        return sum(self.counts[:n]) / total if total else 0.0

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "term", "count"])
            for i, (t, c) in enumerate(zip(self.terms, self.counts), start=1):
                w.writerow([i, t, c])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Vocabulary":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = sorted(csv.DictReader(fh), key=lambda r: int(r["rank"]))
        return cls(tuple(r["term"] for r in rows), tuple(int(r["count"]) for r in rows))


def build_vocabulary(docs: Sequence[TermList], min_count: int = 1) -> Vocabulary:
    """Count term occurrences (with multiplicity) across all documents.

    Terms seen fewer than ``min_count`` times are dropped; the result may then be
    empty, but an input without any terms at all raises ``EmptyCorpusError``.
    """
    counts: Counter[str] = Counter()
    for d in docs:
        counts.update(d.terms)
    if not counts:
        raise EmptyCorpusError("empty corpus")
    ranked = sorted((item for item in counts.items() if item[1] >= min_count),
                    key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary(tuple(t for t, _ in ranked), tuple(c for _, c in ranked))


@dataclass
class AuthorProfile:
    author_id: str
    term_counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.term_counts.values())

    def restricted(self, vocab: Vocabulary) -> "AuthorProfile":
        return AuthorProfile(self.author_id, {t: c for t, c in self.term_counts.items() if t in vocab})


def author_profiles(corpus: Corpus, docs: Sequence[TermList],
                    vocab: Vocabulary | None = None) -> list[AuthorProfile]:
    """Sum term counts over each author's documents, in corpus author order.

    A co-authored paper appears once per author in the corpus and so counts
    towards every one of those profiles.
    """
    if len(docs) != len(corpus.records):
        raise ValueError("docs are not aligned with corpus records")
    per_author: dict[str, Counter] = {a.author_id: Counter() for a in corpus.authors}
    for doc in docs:
        rec = corpus.records[doc.doc_index]
        terms = doc.terms if vocab is None else [t for t in doc.terms if t in vocab]
        per_author[rec.author_id].update(terms)
    profiles = []
    for a in corpus.authors:
        counts = dict(sorted(per_author[a.author_id].items()))
        if not counts:
            warnings.warn(f"author {a.author_id} has no retained terms", stacklevel=2)
        profiles.append(AuthorProfile(a.author_id, counts))
    return profiles
