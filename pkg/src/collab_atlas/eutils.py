"""Paged search-then-fetch client for NCBI E-utilities style endpoints."""

from __future__ import annotations

import logging
import os
import threading
import time
import warnings
import xml.etree.ElementTree as ET
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Iterable

import requests

from .biblio import AuthorQuery, Corpus, PublicationRecord

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/"
API_KEY_ENV = "NCBI_API_KEY"
RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class FetchError(RuntimeError):
    def __init__(self, query: str, status: int | None, message: str):
        super().__init__(f"{message} (query={query!r}, last status={status})")
        self.query = query
        self.status = status


@dataclass
class ClientConfig:
    base_url: str = DEFAULT_BASE_URL
    api_key: str | None = None
    rate: float | None = None
    page_size: int = 200
    retries: int = 4
    backoff: float = 0.5
    backoff_cap: float = 8.0
    timeout: float = 30.0
    database: str = "pubmed"

    @classmethod
    def from_env(cls, **overrides) -> "ClientConfig":
        cfg = cls(**overrides)
        if cfg.api_key is None:
            cfg.api_key = os.environ.get(API_KEY_ENV) or None
        return cfg

    @property
    def effective_rate(self) -> float:
        if self.rate is not None:
            return self.rate
        return 10.0 if self.api_key else 3.0


class RateLimiter:
    """Sliding-window limiter: at most ``rate`` acquisitions in any 1 s window.

    ``clock`` and ``sleep`` are injectable so tests can drive a fake clock.
    Fractional rates below 1 fall back to fixed spacing of ``1/rate`` seconds.
    """

    def __init__(self, rate: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.clock = clock
        self.sleep = sleep
        self._window = 1.0 if rate >= 1 else 1.0 / rate
        self._slots = max(1, int(rate))
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        with self._lock:
            while True:
                now = self.clock()
                while self._stamps and now - self._stamps[0] >= self._window:
                    self._stamps.popleft()
                if len(self._stamps) < self._slots:
                    self._stamps.append(now)
                    return now
                self.sleep(self._window - (now - self._stamps[0]))


class EutilsClient:
    def __init__(self, config: ClientConfig | None = None, session: requests.Session | None = None,
                 limiter: RateLimiter | None = None, sleep: Callable[[float], None] = time.sleep):
        self.config = config or ClientConfig.from_env()
        self.session = session or requests.Session()
        self.limiter = limiter or RateLimiter(self.config.effective_rate)
        self._sleep = sleep

    def _request(self, endpoint: str, params: dict, query: str) -> requests.Response:
        cfg = self.config
        params = {"db": cfg.database, **params}
        if cfg.api_key:
            params["api_key"] = cfg.api_key
        url = cfg.base_url.rstrip("/") + "/" + endpoint
        status = None
        for attempt in range(cfg.retries + 1):
            self.limiter.acquire()
            try:
                resp = self.session.post(url, data=params, timeout=cfg.timeout)
            except requests.RequestException as exc:
                log.warning("request to %s failed: %s", endpoint, exc)
                status = None
            else:
                status = resp.status_code
                if status == 200:
                    return resp
                if status not in RETRYABLE_STATUS:
                    raise FetchError(query, status, f"{endpoint} returned HTTP {status}")
                log.warning("%s returned HTTP %s, retrying", endpoint, status)
            if attempt < cfg.retries:
                self._sleep(min(cfg.backoff_cap, cfg.backoff * 2**attempt))
        raise FetchError(query, status, f"{endpoint} failed after {cfg.retries} retries")

    def search(self, query: str, retstart: int, retmax: int) -> tuple[int, list[str]]:
        resp = self._request(
            "esearch.fcgi",
            {"term": query, "retstart": retstart, "retmax": retmax, "retmode": "json"},
            query,
        )
        try:
            result = resp.json()["esearchresult"]
            return int(result["count"]), [str(i) for i in result.get("idlist", [])]
        except (ValueError, KeyError) as exc:
            raise FetchError(query, resp.status_code, f"unparseable esearch reply: {exc}") from exc

    def fetch(self, ids: list[str], query: str) -> list[PublicationRecord]:
        resp = self._request(
            "efetch.fcgi", {"id": ",".join(ids), "retmode": "xml", "rettype": "abstract"}, query
        )
        try:
            return parse_pubmed_xml(resp.content)
        except ET.ParseError as exc:
            raise FetchError(query, resp.status_code, f"unparseable efetch reply: {exc}") from exc

    def fetch_author_records(self, q: AuthorQuery) -> list[PublicationRecord]:
        size = self.config.page_size
        ids: list[str] = []
        count = None
        while count is None or len(ids) < count:
            count, page = self.search(q.query, len(ids), size)
            if not page:
                break
            ids.extend(page)
        if not ids:
            warnings.warn(f"query for {q.author_id} returned no records", stacklevel=2)
            return []
        records: list[PublicationRecord] = []
        for start in range(0, len(ids), size):
            records.extend(self.fetch(ids[start:start + size], q.query))
        return [r.with_author(q.author_id) for r in records]


def _text(elem: ET.Element | None) -> str:
    return "".join(elem.itertext()).strip() if elem is not None else ""


def parse_pubmed_xml(payload: bytes | str) -> list[PublicationRecord]:
    """Parse a PubmedArticleSet document; author_id is left empty for the caller."""
    root = ET.fromstring(payload)
    out = []
    for art in root.iter("PubmedArticle"):
        cit = art.find("MedlineCitation")
        if cit is None:
            continue
        pmid = _text(cit.find("PMID"))
        if not pmid:
            continue
        article = cit.find("Article")
        title = _text(article.find("ArticleTitle")) if article is not None else ""
        parts = article.findall("Abstract/AbstractText") if article is not None else []
        abstract = " ".join(_text(p) for p in parts if _text(p))
        keywords = [_text(k) for k in cit.iter("Keyword") if _text(k)]
        authors = []
        if article is not None:
            for au in article.findall("AuthorList/Author"):
                collective = _text(au.find("CollectiveName"))
                if collective:
                    authors.append(collective)
                    continue
                last = _text(au.find("LastName"))
                fore = _text(au.find("ForeName")) or _text(au.find("Initials"))
                if last:
                    authors.append(f"{last} {fore}".strip())
        out.append(PublicationRecord(pmid, title, abstract, keywords, authors, ""))
    return out


def fetch_corpus(queries: Iterable[AuthorQuery], client: EutilsClient | None = None,
                 workers: int = 1) -> Corpus:
    """Fetch every query; all workers share the client's rate limiter."""
    queries = list(queries)
    client = client or EutilsClient()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(client.fetch_author_records, queries))
    records = [r for batch in results for r in batch]
    return Corpus(records, queries, datetime.now(timezone.utc))
