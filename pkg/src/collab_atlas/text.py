"""Tokenization, plural lemmatization and term filtering."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from .biblio import PublicationRecord

# Optional sign only before a digit; hyphen/period joins keep "hiv-1" and "0.1" whole.
TOKEN_RE = re.compile(r"(?:[+-](?=\d))?\w+(?:[-.]\w+)*")
NUMERIC_RE = re.compile(r"^[+-]?(?:[0-9]+(?:\.[0-9]+)?|\.[0-9]+)$")
_DASHES = str.maketrans({"−": "-", "–": "-", "‐": "-", "‑": "-"})

IRREGULAR_PLURALS = {
    "children": "child", "women": "woman", "men": "man", "mice": "mouse", "lice": "louse",
    "feet": "foot", "teeth": "tooth", "geese": "goose", "people": "person",
    "analyses": "analysis", "diagnoses": "diagnosis", "hypotheses": "hypothesis",
    "prognoses": "prognosis", "syntheses": "synthesis", "theses": "thesis", "crises": "crisis",
    "metastases": "metastasis", "axes": "axis", "bases": "base", "indices": "index",
    "matrices": "matrix", "vertices": "vertex", "appendices": "appendix", "criteria": "criterion",
    "phenomena": "phenomenon", "nuclei": "nucleus", "fungi": "fungus", "stimuli": "stimulus",
    "loci": "locus", "bacilli": "bacillus", "foci": "focus", "radii": "radius",
    "viruses": "virus", "lives": "life", "wives": "wife", "knives": "knife", "halves": "half",
    "leaves": "leaf", "calves": "calf", "selves": "self",
}

# Tokens that look plural but are singular words or acronyms.
PROTECTED = frozenset({
    "als", "ngs", "aids", "sars", "mers", "hiv", "copd", "mrsa", "gis", "ms", "ptsd", "sds",
    "species", "series", "news", "lens", "bias", "gas", "chaos", "mathematics", "statistics",
    "genomics", "proteomics", "metabolomics", "economics", "physics", "ethics", "diabetes",
    "rabies", "herpes", "measles", "mumps", "scabies", "caries", "facies", "pancreas", "biceps",
    "forceps", "thus", "various", "previous", "his", "this", "its", "yes", "plus", "versus",
    "whereas", "perhaps", "always", "sometimes", "nevertheless", "nonetheless",
})


def lemmatize(token: str) -> str:
    """Reduce a lower-case English plural to its singular form."""
    if token in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[token]
    if token in PROTECTED or len(token) <= 3 or not token.endswith("s"):
        return token
    if token.endswith("ies") and len(token) > 4:
        stem = token[:-3] + "y"
    elif token.endswith(("sses", "zzes", "xes", "ches", "shes")):
        stem = token[:-2]
    elif token.endswith(("ss", "us", "is")):
        return token
    else:
        stem = token[:-1]
    # "mens" -> "men" -> "man": keeps the mapping idempotent
    return IRREGULAR_PLURALS.get(stem, stem)


def read_exclusions(path: str | Path | None = None) -> set[str]:
    """Load an exclusion list; ``None`` loads the shipped default."""
    if path is None:
        text = resources.files("collab_atlas").joinpath("data/exclusions.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    terms = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            terms.add(line)
    return terms


@dataclass(frozen=True)
class TermList:
    doc_index: int
    terms: tuple[str, ...]


def tokenize(text: str) -> list[str]:
    return TOKEN_RE.findall(text.translate(_DASHES).lower())


def filter_terms(tokens: Iterable[str], exclusions: set[str],
                 keep: Callable[[str], bool] | None = None) -> list[str]:
    out = []
    for tok in tokens:
        term = lemmatize(tok.lower())
        if len(term) < 2 or NUMERIC_RE.match(term):
            continue
        if term in exclusions or tok in exclusions:
            continue
        if keep is not None and not keep(term):
            continue
        out.append(term)
    return out


def tokenize_and_filter(record: PublicationRecord | str, exclusions: set[str],
                        doc_index: int = 0, keep: Callable[[str], bool] | None = None) -> TermList:
    """Turn a record's title, abstract and keywords into filtered lemmatized terms.

    ``keep`` is an optional extra predicate (e.g. a part-of-speech filter).
    """
    text = record if isinstance(record, str) else record.text
    return TermList(doc_index, tuple(filter_terms(tokenize(text), exclusions, keep)))
