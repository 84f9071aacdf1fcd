import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs

import pytest

from collab_atlas.biblio import AuthorQuery
from collab_atlas.eutils import (ClientConfig, EutilsClient, FetchError, RateLimiter,
                                 fetch_corpus, parse_pubmed_xml)


def article_xml(pmid, authors=("Poon Art",)):
    au = "".join(f"<Author><LastName>{a.split()[0]}</LastName><ForeName>{a.split()[1]}</ForeName></Author>"
                 for a in authors)
    return (f"<PubmedArticle><MedlineCitation><PMID>{pmid}</PMID><Article>"
            f"<ArticleTitle>Title {pmid}</ArticleTitle>"
            f"<Abstract><AbstractText Label='A'>Part one.</AbstractText>"
            f"<AbstractText>Part <i>two</i>.</AbstractText></Abstract>"
            f"<AuthorList>{au}</AuthorList></Article>"
            f"<KeywordList><Keyword>hiv</Keyword></KeywordList></MedlineCitation></PubmedArticle>")


class MockEutils:
    """Tiny E-utilities stand-in: queries map to fixed id lists."""

    def __init__(self, results, fail_first=0, fail_status=429):
        self.results = results
        self.fail_remaining = fail_first
        self.fail_status = fail_status
        self.calls = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                body = self.rfile.read(int(self.headers["Content-Length"])).decode()
                params = {k: v[0] for k, v in parse_qs(body).items()}
                outer.calls.append((self.path, params))
                if outer.fail_remaining:
                    outer.fail_remaining -= 1
                    self.send_response(outer.fail_status)
                    self.end_headers()
                    return
                if self.path.endswith("esearch.fcgi"):
                    ids = outer.results.get(params["term"], [])
                    start, size = int(params["retstart"]), int(params["retmax"])
                    payload = json.dumps({"esearchresult": {
                        "count": str(len(ids)), "idlist": ids[start:start + size]}}).encode()
                else:
                    arts = "".join(article_xml(i) for i in params["id"].split(","))
                    payload = f"<PubmedArticleSet>{arts}</PubmedArticleSet>".encode()
                self.send_response(200)
                self.end_headers()
                self.wfile.write(payload)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_port}/"
        threading.Thread(target=self.server.serve_forever, daemon=True).start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def server_factory():
    made = []

    def make(*args, **kw):
        s = MockEutils(*args, **kw)
        made.append(s)
        return s

    yield make
    for s in made:
        s.close()


def client_for(server, **kw):
    cfg = ClientConfig(base_url=server.url, rate=1000.0, page_size=100, backoff=0.0, **kw)
    return EutilsClient(cfg, sleep=lambda s: None)


def test_paged_fetch_collects_all_records(server_factory):
    ids = [str(10000 + i) for i in range(237)]
    srv = server_factory({"poon af": ids})
    recs = client_for(srv).fetch_author_records(AuthorQuery("ap", "Art Poon", "poon af"))
    assert len(recs) == 237
    assert [r.record_id for r in recs] == ids
    assert all(r.author_id == "ap" for r in recs)
    searches = [p for path, p in srv.calls if path.endswith("esearch.fcgi")]
    fetched = [len(p["id"].split(",")) for path, p in srv.calls if path.endswith("efetch.fcgi")]
    assert [int(p["retstart"]) for p in searches] == [0, 100, 200]
    assert fetched == [100, 100, 37]


def test_zero_results_warns_and_returns_empty(server_factory):
    srv = server_factory({})
    with pytest.warns(UserWarning, match="no records"):
        recs = client_for(srv).fetch_author_records(AuthorQuery("x", "X", "nobody"))
    assert recs == []


def test_exclusion_query_passed_verbatim(server_factory):
    # the server only knows the NOT-query; the homonym's paper is absent from its list
    q = "art poon NOT art f poon"
    srv = server_factory({q: ["1", "2"], "art poon": ["1", "2", "3"]})
    recs = client_for(srv).fetch_author_records(AuthorQuery("ap", "Art Poon", q))
    assert [r.record_id for r in recs] == ["1", "2"]
    assert srv.calls[0][1]["term"] == q


def test_transient_429_is_retried(server_factory):
    srv = server_factory({"q": ["7"]}, fail_first=2)
    sleeps = []
    cfg = ClientConfig(base_url=srv.url, rate=1000.0, backoff=0.5, backoff_cap=8.0, retries=4)
    recs = EutilsClient(cfg, sleep=sleeps.append).fetch_author_records(AuthorQuery("a", "A", "q"))
    assert [r.record_id for r in recs] == ["7"]
    assert sleeps == [0.5, 1.0]


def test_retries_exhausted_raise_fetch_error(server_factory):
    srv = server_factory({"q": ["7"]}, fail_first=100, fail_status=503)
    with pytest.raises(FetchError) as err:
        client_for(srv, retries=2).fetch_author_records(AuthorQuery("a", "A", "q"))
    assert err.value.status == 503
    assert err.value.query == "q"
    assert len(srv.calls) == 3


def test_non_retryable_status_fails_fast(server_factory):
    srv = server_factory({"q": ["7"]}, fail_first=1, fail_status=400)
    with pytest.raises(FetchError):
        client_for(srv).fetch_author_records(AuthorQuery("a", "A", "q"))
    assert len(srv.calls) == 1


def test_fetch_corpus_tags_every_author(server_factory):
    srv = server_factory({"qa": ["1", "2"], "qb": ["2", "3"]})
    qs = [AuthorQuery("a", "A", "qa"), AuthorQuery("b", "B", "qb")]
    corpus = fetch_corpus(qs, client_for(srv), workers=2)
    assert sorted((r.author_id, r.record_id) for r in corpus.records) == [
        ("a", "1"), ("a", "2"), ("b", "2"), ("b", "3")]


class FakeClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        return self.t

    def sleep(self, dt):
        self.t += dt


@pytest.mark.parametrize("rate", [3.0, 10.0])
def test_rate_limiter_never_exceeds_rate(rate):
    clock = FakeClock()
    lim = RateLimiter(rate, clock=clock, sleep=clock.sleep)
    stamps = [lim.acquire() for _ in range(50)]
    for i in range(len(stamps)):
        in_window = [s for s in stamps if stamps[i] <= s < stamps[i] + 1.0]
        assert len(in_window) <= rate
    # the limiter is not needlessly slow either
    assert stamps[-1] <= 50 / rate


def test_fractional_rate_spaces_requests():
    clock = FakeClock()
    lim = RateLimiter(0.5, clock=clock, sleep=clock.sleep)
    stamps = [lim.acquire() for _ in range(4)]
    assert stamps == [0.0, 2.0, 4.0, 6.0]


def test_api_key_raises_default_rate(monkeypatch):
    monkeypatch.setenv("NCBI_API_KEY", "k")
    assert ClientConfig.from_env().effective_rate == 10.0
    monkeypatch.delenv("NCBI_API_KEY")
    assert ClientConfig.from_env().effective_rate == 3.0


def test_parse_xml_joins_structured_abstract():
    (rec,) = parse_pubmed_xml(f"<PubmedArticleSet>{article_xml('42')}</PubmedArticleSet>")
    assert rec.record_id == "42"
    assert rec.abstract == "Part one. Part two."
    assert rec.keywords == ("hiv",)
    assert rec.authors == ("Poon Art",)
