"""Author queries, publication records and the on-disk corpus format."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

CORPUS_VERSION = 1
QUERY_COLUMNS = ("author_id", "display_name", "query")
RECORD_FIELDS = ("record_id", "title", "abstract", "keywords", "authors", "author_id")


class QueryFileError(ValueError):
    pass


class CorpusFormatError(ValueError):
    """Raised for unreadable corpus files; ``offset`` is a byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class AuthorQuery:
    author_id: str
    display_name: str
    query: str


@dataclass(frozen=True)
class PublicationRecord:
    record_id: str
    title: str
    abstract: str
    keywords: tuple[str, ...]
    authors: tuple[str, ...]
    author_id: str

    def __post_init__(self):
        if not self.record_id:
            raise ValueError("record_id must be non-empty")
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "authors", tuple(self.authors))

    @property
    def text(self) -> str:
        """Title, abstract and keywords joined as one document."""
        return "\n".join([self.title, self.abstract, *self.keywords])

    def with_author(self, author_id: str) -> "PublicationRecord":
        return PublicationRecord(
            self.record_id, self.title, self.abstract, self.keywords, self.authors, author_id
        )


@dataclass(frozen=True)
class Corpus:
    records: tuple[PublicationRecord, ...]
    authors: tuple[AuthorQuery, ...]
    retrieved_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "authors", tuple(self.authors))
        known = {a.author_id for a in self.authors}
        if len(known) != len(self.authors):
            raise ValueError("duplicate author_id in corpus authors")
        for r in self.records:
            if r.author_id not in known:
                raise ValueError(f"record {r.record_id} references unknown author {r.author_id!r}")

    def records_for(self, author_id: str) -> list[PublicationRecord]:
        return [r for r in self.records if r.author_id == author_id]

    def empty_abstract_fraction(self) -> float:
        if not self.records:
            return 0.0
        return sum(1 for r in self.records if not r.abstract.strip()) / len(self.records)


def parse_query_file(path: str | Path) -> list[AuthorQuery]:
    """Read a ``author_id,display_name,query`` CSV file.

    Row numbers in error messages count the header as row 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in QUERY_COLUMNS:
            if col not in header:
                raise QueryFileError(f"{path}: missing column {col!r}")
        queries: list[AuthorQuery] = []
        seen: dict[str, int] = {}
        for rowno, row in enumerate(reader, start=2):
            aid = (row["author_id"] or "").strip()
            query = (row["query"] or "").strip()
            if not aid:
                raise QueryFileError(f"{path}: row {rowno} has an empty author_id")
            if not query:
                raise QueryFileError(f"{path}: row {rowno} has an empty query")
            if aid in seen:
                raise QueryFileError(
                    f"{path}: duplicate author_id {aid!r} in rows {seen[aid]} and {rowno}"
                )
            seen[aid] = rowno
            queries.append(AuthorQuery(aid, (row["display_name"] or "").strip(), query))
    return queries


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "version": CORPUS_VERSION,
        "retrieved_at": corpus.retrieved_at.isoformat(),
        "authors": [asdict(a) for a in corpus.authors],
        "records": [
            {
                "record_id": r.record_id,
                "title": r.title,
                "abstract": r.abstract,
                "keywords": list(r.keywords),
                "authors": list(r.authors),
                "author_id": r.author_id,
            }
            for r in corpus.records
        ],
    }


def corpus_from_dict(data: dict) -> Corpus:
    if not isinstance(data, dict):
        raise CorpusFormatError("corpus file must contain a JSON object")
    version = data.get("version")
    if version != CORPUS_VERSION:
        raise CorpusFormatError(f"unsupported corpus schema version {version!r}")
    try:
        authors = [AuthorQuery(a["author_id"], a["display_name"], a["query"]) for a in data["authors"]]
        records = [PublicationRecord(**{k: r[k] for k in RECORD_FIELDS}) for r in data["records"]]
        retrieved_at = datetime.fromisoformat(data["retrieved_at"])
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(f"corpus file is missing a required field: {exc}") from exc
    return Corpus(records, authors, retrieved_at)


def persist_corpus(corpus: Corpus, path: str | Path) -> None:
    text = json.dumps(corpus_to_dict(corpus), ensure_ascii=False, indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_corpus(path: str | Path) -> Corpus:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusFormatError("corpus file is not valid UTF-8", exc.start) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise CorpusFormatError(f"malformed corpus JSON: {exc.msg}", offset) from exc
    return corpus_from_dict(data)
