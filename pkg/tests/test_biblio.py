import json

import pytest

from collab_atlas.biblio import (AuthorQuery, Corpus, CorpusFormatError, PublicationRecord,
                                 QueryFileError, load_corpus, parse_query_file, persist_corpus)


def write(tmp_path, text, name="q.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_query_row_maps_fields(tmp_path):
    p = write(tmp_path, 'author_id,display_name,query\n'
                        'ap,Art Poon,"poon af AND (western OR bc centre)"\n')
    assert parse_query_file(p) == [
        AuthorQuery("ap", "Art Poon", "poon af AND (western OR bc centre)")]


def test_header_only_gives_empty_list(tmp_path):
    assert parse_query_file(write(tmp_path, "author_id,display_name,query\n")) == []


def test_duplicate_author_names_both_rows(tmp_path):
    p = write(tmp_path, "author_id,display_name,query\nap,A,x\nap,B,y\n")
    with pytest.raises(QueryFileError, match="rows 2 and 3"):
        parse_query_file(p)


def test_missing_column_is_named(tmp_path):
    p = write(tmp_path, "author_id,query\nap,x\n")
    with pytest.raises(QueryFileError, match="display_name"):
        parse_query_file(p)


def _corpus(records=()):
    authors = (AuthorQuery("a", "A", "qa"), AuthorQuery("b", "B", "qb"))
    return Corpus(tuple(records), authors)


def test_empty_corpus_round_trip(tmp_path):
    c = _corpus()
    persist_corpus(c, tmp_path / "c.json")
    data = json.loads((tmp_path / "c.json").read_text(encoding="utf-8"))
    assert data["records"] == []
    assert load_corpus(tmp_path / "c.json") == c


def test_unicode_round_trip(tmp_path):
    rec = PublicationRecord("1", "Effect size ± 0.2", "mean ± sd; β-cells", ("±",), ("Poon A",), "a")
    c = _corpus([rec])
    persist_corpus(c, tmp_path / "c.json")
    back = load_corpus(tmp_path / "c.json")
    assert back == c
    assert back.records[0].abstract == "mean ± sd; β-cells"
    assert "±" in (tmp_path / "c.json").read_text(encoding="utf-8")


def test_large_corpus_count(tmp_path):
    recs = [PublicationRecord(str(i), f"t{i}", "", (), (), "a" if i % 2 else "b")
            for i in range(3530)]
    persist_corpus(_corpus(recs), tmp_path / "c.json")
    assert len(load_corpus(tmp_path / "c.json").records) == 3530


def test_malformed_json_reports_byte_offset(tmp_path):
    # the two-byte "±" before the error shifts the byte offset past the char offset
    text = '{"title": "±", oops}'
    p = write(tmp_path, text, "bad.json")
    with pytest.raises(CorpusFormatError) as err:
        load_corpus(p)
    char_pos = text.index("oops")
    assert err.value.offset == char_pos + 1


def test_unknown_schema_version(tmp_path):
    p = write(tmp_path, json.dumps({"version": 99, "records": [], "authors": []}), "v.json")
    with pytest.raises(CorpusFormatError, match="version"):
        load_corpus(p)


def test_record_for_unknown_author_rejected():
    with pytest.raises(ValueError, match="unknown author"):
        _corpus([PublicationRecord("1", "t", "", (), (), "zz")])
