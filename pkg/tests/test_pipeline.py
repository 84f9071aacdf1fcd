import csv
import json
import shutil

import numpy as np
import pytest

from collab_atlas.cli import main
from collab_atlas.config import ConfigError, load_config
from collab_atlas.fixtures import fixture_clusters, write_fixture
from collab_atlas.geometry import CondensedDistanceMatrix
from collab_atlas.graph.metrics import adjusted_rand_index
from collab_atlas.pipeline import (OUTPUTS, PipelineError, StaleInputError, compare_distances,
                                   run_stage)


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    d = tmp_path_factory.mktemp("atlas")
    cfg_path = write_fixture(d)
    run_stage("report", load_config(cfg_path), from_scratch=True)
    return d


def write_cfg(tmp_path, text):
    p = tmp_path / "atlas.toml"
    p.write_text(text, encoding="utf-8")
    return p


def test_config_resolves_paths_and_overrides(tmp_path):
    p = write_cfg(tmp_path, '[paths]\ncorpus = "c.json"\n[ot]\nthreads = 2\nmemory_budget_mb = 1\n')
    cfg = load_config(p, {"graph.k": 5})
    assert cfg.corpus == tmp_path / "c.json"
    assert cfg.output == tmp_path / "out"
    assert cfg.ot.workers == 2 and cfg.ot.memory_budget == 2**20
    assert cfg.graph.k == 5


@pytest.mark.parametrize("text, match", [
    ("[matrix]\nvocab_size = 5000\n", "corpus is required"),
    ('[paths]\ncorpus = "c"\n[matrix]\nvocab_size = 10\n', "vocab_size"),
    ('[paths]\ncorpus = "c"\n[ot]\nmethod = "lp"\n', "ot.method"),
    ('[paths]\ncorpus = "c"\n[ot]\np = 3\n', "p must be"),
    ('[paths]\ncorpus = "c"\n[umap]\nbogus = 1\n', "umap"),
    ('[paths]\ncorpus = "c"\n[graph]\nk = 0\n', "graph.k"),
    ("[paths\n", "atlas.toml"),
])
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write_cfg(tmp_path, text))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_stage_outputs_and_manifests(finished):
    out = finished / "out"
    for stage, names in OUTPUTS.items():
        for name in names:
            assert (out / name).exists(), name
        manifest = json.loads((out / f"{stage}.manifest.json").read_text())
        assert manifest["stage"] == stage
        assert set(manifest["outputs"]) == set(names)
        assert "seconds" not in json.dumps(manifest)
        assert (out / f"{stage}.timing.json").exists()


def test_recovers_planted_clusters(finished):
    part = json.loads((finished / "out" / "partition.json").read_text())
    planted = fixture_clusters()
    found = dict(zip(part["vertices"], part["assignment"]))
    assert adjusted_rand_index(found, planted) == 1.0
    with open(finished / "out" / "clusters.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["size"] for r in rows] == ["4", "4", "4"]
    # every cluster's first characteristic word comes from its planted pool
    from collab_atlas.fixtures import CLUSTER_WORDS
    from collab_atlas.text import lemmatize
    pools = [{lemmatize(w) for w in ws} for ws in CLUSTER_WORDS.values()]
    for r in rows:
        top = r["top_words"].split(";")[0]
        assert any(top in pool for pool in pools)


def test_stats_json_contents(finished):
    stats = json.loads((finished / "out" / "stats.json").read_text())
    for key in ("epsilon", "k", "degree", "modularity", "closeness", "within_cluster_distance",
                "within_group_distance", "group_null", "ari_clusters_vs_groups",
                "distance_spearman", "word_association"):
        assert key in stats
    assert stats["degree"]["min"] >= 1
    assert 0 < stats["ari_clusters_vs_groups"] < 1
    assert set(stats["word_association"]) == {"synapse|cohort", "patient|cell"}


def test_dedup_dropped_coauthored_copies(finished):
    dedup = json.loads((finished / "out" / "dedup.json").read_text())
    assert len(dedup["dropped_rows"]) == 2


def test_missing_upstream_names_stage(tmp_path, capsys):
    cfg = write_fixture(tmp_path)
    assert main(["graph", "--config", str(cfg)]) == 2
    assert "run distances first" in capsys.readouterr().err


def test_stale_input_detected_and_forced(tmp_path, capsys):
    cfg_path = write_fixture(tmp_path)
    cfg = load_config(cfg_path)
    run_stage("process", cfg)
    with open(tmp_path / "out" / "terms.json", "a", encoding="utf-8") as fh:
        fh.write("\n")
    with pytest.raises(StaleInputError, match="rerun process or pass --force"):
        run_stage("matrix", cfg)
    assert main(["matrix", "--config", str(cfg_path)]) == 2
    assert "--force" in capsys.readouterr().err
    with pytest.warns(UserWarning, match="does not match"):
        run_stage("matrix", cfg, force=True)


def test_rerun_is_byte_identical(finished, tmp_path):
    shutil.copytree(finished, tmp_path / "again", ignore=shutil.ignore_patterns("out"))
    run_stage("report", load_config(tmp_path / "again" / "atlas.toml"), from_scratch=True)
    for names in OUTPUTS.values():
        for name in names:
            a = (finished / "out" / name).read_bytes()
            b = (tmp_path / "again" / "out" / name).read_bytes()
            assert a == b, name


def test_compare_distances():
    a = CondensedDistanceMatrix(3, [1.0, 2.0, 3.0], "author", ["x", "y", "z"])
    b = CondensedDistanceMatrix(3, [10.0, 20.0, 30.0], "author", ["x", "y", "z"])
    res, rows = compare_distances(a, b)
    assert res.rho == 1.0
    assert len(rows) == 6 and rows[0] == ("x", "y", 1.0, 10.0)
    with pytest.raises(PipelineError, match="different orders"):
        compare_distances(a, CondensedDistanceMatrix(3, [1.0, 2.0, 3.0], "author", ["y", "x", "z"]))


def test_cli_fixture_and_fetch(tmp_path, capsys):
    from test_eutils import MockEutils
    assert main(["fixture", "--out", str(tmp_path / "fx")]) == 0
    assert (tmp_path / "fx" / "atlas.toml").exists()
    srv = MockEutils({'"Ada Neuron"[Author]': ["1", "2"]})
    try:
        (tmp_path / "q.csv").write_text('author_id,display_name,query\nA01,Ada,"""Ada Neuron""[Author]"\n')
        assert main(["fetch", "--queries", str(tmp_path / "q.csv"), "--out", str(tmp_path / "c.json"),
                     "--base-url", srv.url, "--rate", "100"]) == 0
    finally:
        srv.close()
    data = json.loads((tmp_path / "c.json").read_text())
    assert [r["record_id"] for r in data["records"]] == ["1", "2"]
    assert data["records"][0]["author_id"] == "A01"


def test_cli_overrides_reach_graph(tmp_path):
    cfg_path = write_fixture(tmp_path)
    assert main(["report", "--config", str(cfg_path), "--from-scratch", "--k", "2", "--seed", "3"]) == 0
    manifest = json.loads((tmp_path / "out" / "graph.manifest.json").read_text())
    assert manifest["params"]["k"] == 2 and manifest["seed"] == 3
    A = np.array(json.loads((tmp_path / "out" / "partition.json").read_text())["directed_edges"])
    assert len(A) <= 2 * 12
