"""File-based pipeline stages with manifests and staleness checks.

Every stage reads its predecessors' files from the output directory and
writes its own files plus ``<stage>.manifest.json``: parameters, seed and
the SHA-256 of every input and output. Wall-clock timings go to a separate
``<stage>.timing.json`` so that reruns leave the manifest byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
import warnings
from collections import Counter
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .biblio import load_corpus
from .config import PipelineConfig
from .docterm import SparseDocTermMatrix, build_matrix, dedupe_rows
from .embedding import TermEmbedding, umap_embed
from .geometry import CondensedDistanceMatrix, pairwise_term_distances
from .graph import (adjusted_rand_index, build_author_graph, characteristic_words,
                    closeness_centrality, degree_stats, louvain_replicates, permutation_null,
                    within_cluster_distance, write_dot, write_graphml)
from .stats import ContingencyTable2x2, DegenerateInputError, fisher_exact, spearman, \
    wilcoxon_signed_rank
from .text import TermList, read_exclusions, tokenize_and_filter
from .transport import make_point_pattern, pairwise_author_distances, pairwise_direct_distances
from .vocab import AuthorProfile, Vocabulary, build_vocabulary
from .zipf import ZipfFitError, fit_zipf_mandelbrot, write_zipf_report

log = logging.getLogger(__name__)

STAGES = ("fetch", "process", "matrix", "embed", "distances", "graph", "report")

OUTPUTS = {
    "process": ("terms.json", "vocabulary.csv", "zipf.json", "zipf.csv", "author_terms.csv"),
    "matrix": ("matrix.csv", "matrix.json", "dedup.json"),
    "embed": ("embedding.csv",),
    "distances": ("author_distances.csv", "author_distances.bin", "author_distances.bin.json",
                  "direct_distances.csv", "distance_trends.csv", "distance_comparison.json"),
    "graph": ("graph.graphml", "graph.dot", "partition.json"),
    "report": ("clusters.csv", "stats.json"),
}

# (producing stage, file) pairs each stage reads
INPUTS = {
    "process": (),
    "matrix": (("process", "terms.json"), ("process", "vocabulary.csv")),
    "embed": (("matrix", "matrix.csv"), ("matrix", "matrix.json"), ("process", "vocabulary.csv")),
    "distances": (("process", "terms.json"), ("process", "vocabulary.csv"),
                  ("embed", "embedding.csv")),
    "graph": (("distances", "author_distances.bin"), ("distances", "author_distances.bin.json"),
              ("process", "terms.json")),
    "report": (("graph", "partition.json"), ("distances", "author_distances.bin"),
               ("distances", "author_distances.bin.json"), ("distances", "direct_distances.csv"),
               ("distances", "distance_comparison.json"), ("process", "terms.json"),
               ("process", "vocabulary.csv"), ("matrix", "matrix.csv"), ("matrix", "matrix.json")),
}


class PipelineError(RuntimeError):
    pass


class MissingArtifactError(PipelineError):
    def __init__(self, stage: str, path: Path):
        super().__init__(f"{path.name} not found in {path.parent}: run {stage} first")
        self.stage = stage
        self.path = path


class StaleInputError(PipelineError):
    pass


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _clean(obj):
    """Make a structure JSON-safe: NaN/inf become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=1, ensure_ascii=False, allow_nan=False) + "\n",
                    encoding="utf-8")


def read_json(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def manifest_path(out: Path, stage: str) -> Path:
    return out / f"{stage}.manifest.json"


def check_inputs(cfg: PipelineConfig, stage: str, force: bool = False) -> dict[str, str]:
    """Verify upstream files exist and match the hashes their producers recorded."""
    out = cfg.output
    hashes: dict[str, str] = {}
    if stage == "process":
        if not cfg.corpus.exists():
            raise MissingArtifactError("fetch", cfg.corpus)
        hashes[f"corpus:{cfg.corpus.name}"] = sha256_file(cfg.corpus)
    for producer, name in INPUTS[stage]:
        path = out / name
        if not path.exists():
            raise MissingArtifactError(producer, path)
        digest = sha256_file(path)
        hashes[name] = digest
        mpath = manifest_path(out, producer)
        recorded = read_json(mpath)["outputs"].get(name) if mpath.exists() else None
        if recorded != digest:
            msg = (f"{name} does not match the {producer} manifest; "
                   f"rerun {producer} or pass --force")
            if not force:
                raise StaleInputError(msg)
            warnings.warn(msg, stacklevel=2)
    if stage == "report" and cfg.groups is not None:
        if not cfg.groups.exists():
            raise PipelineError(f"groups file {cfg.groups} not found")
        hashes[f"groups:{cfg.groups.name}"] = sha256_file(cfg.groups)
    return hashes


def _finish(cfg: PipelineConfig, stage: str, inputs: dict, started: float) -> None:
    out = cfg.output
    params = cfg.stage_params(stage)
    manifest = {
        "stage": stage,
        "version": __version__,
        "params": params,
        "seed": params.get("seed"),
        "inputs": dict(sorted(inputs.items())),
        "outputs": {name: sha256_file(out / name) for name in OUTPUTS[stage]},
    }
    write_json(manifest_path(out, stage), manifest)
    write_json(out / f"{stage}.timing.json", {"stage": stage, "seconds": time.perf_counter() - started})


# -- shared readers ---------------------------------------------------------

def read_terms(out: Path) -> tuple[list[dict], list[TermList], list[dict]]:
    data = read_json(out / "terms.json")
    docs = [TermList(d["doc"], tuple(d["terms"])) for d in data["docs"]]
    return data["authors"], docs, data["docs"]


def truncated_vocab(cfg: PipelineConfig) -> Vocabulary:
    return Vocabulary.from_csv(cfg.output / "vocabulary.csv").truncate(cfg.vocab_size)


def profiles_from_terms(authors: list[dict], doc_meta: list[dict],
                        vocab: Vocabulary | None = None) -> list[AuthorProfile]:
    per: dict[str, Counter] = {a["author_id"]: Counter() for a in authors}
    for d in doc_meta:
        terms = d["terms"] if vocab is None else [t for t in d["terms"] if t in vocab]
        per[d["author_id"]].update(terms)
    return [AuthorProfile(a["author_id"], dict(sorted(per[a["author_id"]].items())))
            for a in authors]


def read_groups(path: Path | None) -> dict[str, str] | None:
    if path is None:
        return None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "author_id" not in reader.fieldnames \
                or "group" not in reader.fieldnames:
            raise PipelineError(f"{path}: header must contain author_id,group")
        return {row["author_id"].strip(): row["group"].strip() for row in reader}


# -- stages -------------------------------------------------------------------

def stage_process(cfg: PipelineConfig, force: bool = False) -> None:
    started = time.perf_counter()
    inputs = check_inputs(cfg, "process", force)
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(cfg.corpus)
    exclusions = read_exclusions(cfg.exclusions)
    docs = [tokenize_and_filter(r, exclusions, i) for i, r in enumerate(corpus.records)]
    vocab = build_vocabulary(docs, cfg.min_count)
    n_records = Counter(r.author_id for r in corpus.records)
    authors = [{"author_id": a.author_id, "display_name": a.display_name,
                "n_records": n_records.get(a.author_id, 0)} for a in corpus.authors]
    doc_meta = [{"doc": d.doc_index, "record_id": corpus.records[d.doc_index].record_id,
                 "author_id": corpus.records[d.doc_index].author_id, "terms": list(d.terms)}
                for d in docs]
    write_json(out / "terms.json", {"authors": authors, "docs": doc_meta})
    vocab.to_csv(out / "vocabulary.csv")
    try:
        fit = fit_zipf_mandelbrot(vocab)
        write_zipf_report(fit, vocab.counts, out / "zipf.json", out / "zipf.csv")
    except (ValueError, ZipfFitError) as exc:
        warnings.warn(f"Zipf-Mandelbrot fit skipped: {exc}", stacklevel=2)
        write_json(out / "zipf.json", {"error": str(exc)})
        (out / "zipf.csv").write_text("rank,observed,fitted\n", encoding="utf-8")
    with open(out / "author_terms.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author_id", "term", "count"])
        for prof in profiles_from_terms(authors, doc_meta):
            for term, count in sorted(prof.term_counts.items(), key=lambda tc: (-tc[1], tc[0])):
                w.writerow([prof.author_id, term, count])
    _finish(cfg, "process", inputs, started)


def stage_matrix(cfg: PipelineConfig, force: bool = False) -> None:
    started = time.perf_counter()
    inputs = check_inputs(cfg, "matrix", force)
    out = cfg.output
    _, docs, meta = read_terms(out)
    vocab = truncated_vocab(cfg)
    doc_author = {d["doc"]: d["author_id"] for d in meta}
    record_ids = [d["record_id"] for d in meta]
    X = build_matrix(docs, vocab, doc_author)
    X, report = dedupe_rows(X)
    X.write(out / "matrix.csv", out / "matrix.json", record_ids)
    write_json(out / "dedup.json", {
        "dropped_rows": report.dropped_rows,
        "kept_representative": {str(k): v for k, v in sorted(report.kept_representative.items())},
        "fraction_dropped": report.fraction_dropped,
        "vocab_size": len(vocab),
        "coverage": Vocabulary.from_csv(out / "vocabulary.csv").coverage(cfg.vocab_size),
    })
    _finish(cfg, "matrix", inputs, started)


def stage_embed(cfg: PipelineConfig, force: bool = False) -> None:
    started = time.perf_counter()
    inputs = check_inputs(cfg, "embed", force)
    out = cfg.output
    X = SparseDocTermMatrix.read(out / "matrix.csv", out / "matrix.json")
    D = pairwise_term_distances(X)
    params = cfg.umap
    if params.n_neighbors >= D.n:
        raise PipelineError(f"umap.n_neighbors={params.n_neighbors} needs more than "
                            f"{D.n} embedded terms")
    emb = umap_embed(D, params)
    vocab = Vocabulary.from_csv(out / "vocabulary.csv")
    emb.to_csv(out / "embedding.csv", list(vocab.terms))
    _finish(cfg, "embed", inputs, started)


def compare_distances(w_ot: CondensedDistanceMatrix, w_direct: CondensedDistanceMatrix):
    """Spearman correlation of two author distance matrices plus per-pair rows."""
    if list(w_ot.labels) != list(w_direct.labels):
        raise PipelineError("distance matrices list authors in different orders")
    result = spearman(w_ot.values, w_direct.values)
    rows = []
    for i in range(w_ot.n):
        for j in range(w_ot.n):
            if i != j:
                rows.append((w_ot.labels[i], w_ot.labels[j], w_ot[i, j], w_direct[i, j]))
    return result, rows


def stage_distances(cfg: PipelineConfig, force: bool = False) -> None:
    started = time.perf_counter()
    inputs = check_inputs(cfg, "distances", force)
    out = cfg.output
    authors, _, meta = read_terms(out)
    vocab = truncated_vocab(cfg)
    emb = TermEmbedding.from_csv(out / "embedding.csv", cfg.umap.seed)
    profiles = profiles_from_terms(authors, meta, vocab)
    patterns = [make_point_pattern(p, emb, vocab) for p in profiles]
    W = pairwise_author_distances(patterns, cfg.ot, cfg.ot_method)
    W.write_csv(out / "author_distances.csv")
    W.write_binary(out / "author_distances.bin")
    direct = pairwise_direct_distances(profiles, vocab)
    direct.write_csv(out / "direct_distances.csv")
    rho, rows = compare_distances(W, direct)
    with open(out / "distance_trends.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author_id", "other_id", "wasserstein", "direct"])
        for a, b, x, y in rows:
            w.writerow([a, b, repr(float(x)), repr(float(y))])
    write_json(out / "distance_comparison.json", {"spearman": asdict(rho)})
    _finish(cfg, "distances", inputs, started)


def _vertex_attrs(cfg: PipelineConfig, authors: list[dict], assignment=None) -> dict:
    groups = read_groups(cfg.groups) or {}
    attrs = {
        "display_name": [a["display_name"] for a in authors],
        "group": [groups.get(a["author_id"], "") for a in authors],
        "n_abstracts": [int(a["n_records"]) for a in authors],
    }
    if assignment is not None:
        attrs["cluster"] = list(assignment)
    return attrs


def stage_graph(cfg: PipelineConfig, force: bool = False) -> None:
    started = time.perf_counter()
    inputs = check_inputs(cfg, "graph", force)
    out = cfg.output
    W = CondensedDistanceMatrix.read_binary(out / "author_distances.bin")
    authors, _, _ = read_terms(out)
    if [a["author_id"] for a in authors] != list(W.labels):
        raise PipelineError("author distances and terms.json disagree on authors")
    gp = cfg.graph
    G = build_author_graph(W, gp.k)
    summary = louvain_replicates(G.undirected, gp.louvain_replicates, gp.seed)
    best = summary.best
    write_json(out / "partition.json", {
        "vertices": G.vertices,
        "assignment": best.assignment,
        "modularity": best.modularity,
        "community_count_frequency": summary.community_counts,
        "replicate_modularity": summary.replicate_q,
        "epsilon": G.epsilon,
        "k": G.k,
        "directed_edges": [[G.vertices[i], G.vertices[j]]
                           for i, j in zip(*np.nonzero(G.directed))],
        "undirected_edges": [[G.vertices[i], G.vertices[j]] for i, j in G.edges()],
    })
    attrs = _vertex_attrs(cfg, authors, best.assignment)
    write_graphml(G, out / "graph.graphml", attrs)
    write_dot(G, out / "graph.dot", attrs)
    _finish(cfg, "graph", inputs, started)


def _doc_presence(X: SparseDocTermMatrix, vocab: Vocabulary, word: str) -> np.ndarray | None:
    r = vocab.get_rank(word)
    if r is None:
        return None
    return np.array([r in set(X.rows[d]) for d in X.doc_indices], dtype=bool)


def stage_report(cfg: PipelineConfig, force: bool = False) -> None:
    started = time.perf_counter()
    inputs = check_inputs(cfg, "report", force)
    out = cfg.output
    rp, gp = cfg.report, cfg.graph
    part = read_json(out / "partition.json")
    authors, _, meta = read_terms(out)
    vertices = part["vertices"]
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    A = np.zeros((n, n), dtype=np.int8)
    for a, b in part["undirected_edges"]:
        A[index[a], index[b]] = A[index[b], index[a]] = 1
    assignment = part["assignment"]
    vocab = truncated_vocab(cfg)

    # characteristic words per cluster
    profiles = {p.author_id: p for p in profiles_from_terms(authors, meta, vocab)}
    members: dict[int, list[str]] = {}
    for v, c in zip(vertices, assignment):
        members.setdefault(c, []).append(v)
    words = characteristic_words({c: [profiles[a] for a in m] for c, m in sorted(members.items())},
                                 top_m=rp.top_words, min_count=rp.min_word_count)
    with open(out / "clusters.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "size", "members", "top_words", "scores"])
        for c in sorted(members):
            w.writerow([c, len(members[c]), ";".join(members[c]),
                        ";".join(t for t, _ in words[c]),
                        ";".join(repr(round(s, 12)) for _, s in words[c])])

    # graph statistics
    closeness = closeness_centrality(A)
    by_cluster = within_cluster_distance(A, assignment)
    stats = {
        "epsilon": part["epsilon"],
        "k": part["k"],
        "n_vertices": n,
        "n_edges": int(A.sum() // 2),
        "degree": dict(zip(("min", "max", "mean"), degree_stats(A))),
        "modularity": part["modularity"],
        "n_clusters": len(members),
        "community_count_frequency": part["community_count_frequency"],
        "closeness": {v: closeness.values.get(i) for i, v in enumerate(vertices)},
        "giant_component": {v: closeness.giant[i] for i, v in enumerate(vertices)},
        "within_cluster_distance": {str(c): asdict(s) for c, s in by_cluster.items()},
    }

    groups = read_groups(cfg.groups)
    if groups is not None:
        missing = [v for v in vertices if v not in groups]
        if missing:
            raise PipelineError(f"groups file has no entry for {missing}")
        labels = [groups[v] for v in vertices]
        stats["within_group_distance"] = {g: asdict(s) for g, s in
                                          within_cluster_distance(A, labels).items()}
        nulls = permutation_null(A, labels, gp.null_replicates, gp.seed)
        stats["group_null"] = {g: {k: v for k, v in asdict(s).items() if k != "samples"}
                               for g, s in nulls.items()}
        stats["group_closeness_mean"] = {
            g: closeness.mean_over([i for i, l in enumerate(labels) if l == g])
            for g in sorted(set(labels))}
        stats["ari_clusters_vs_groups"] = adjusted_rand_index(assignment, labels)

    # distance comparison and the direct-distance graph
    stats["distance_spearman"] = read_json(out / "distance_comparison.json")["spearman"]
    direct = CondensedDistanceMatrix.read_csv(out / "direct_distances.csv")
    G_direct = build_author_graph(direct, gp.k)
    c_direct = closeness_centrality(G_direct.undirected)
    keep = [i for i in range(n) if closeness.giant[i] and i in closeness.values
            and i in c_direct.values]
    try:
        wil = wilcoxon_signed_rank([c_direct.values[i] for i in keep],
                                   [closeness.values[i] for i in keep])
        stats["closeness_direct_vs_wasserstein"] = asdict(wil)
    except (DegenerateInputError, ValueError) as exc:
        stats["closeness_direct_vs_wasserstein"] = {"error": str(exc)}

    # word association tables over the deduplicated documents
    X = SparseDocTermMatrix.read(out / "matrix.csv", out / "matrix.json")
    assoc = {}
    for w1, w2 in rp.word_pairs:
        x, y = _doc_presence(X, vocab, w1), _doc_presence(X, vocab, w2)
        key = f"{w1}|{w2}"
        if x is None or y is None:
            assoc[key] = {"error": "word not in vocabulary"}
            continue
        table = ContingencyTable2x2.from_presence(x, y)
        try:
            assoc[key] = {"table": [table.a, table.b, table.c, table.d], **asdict(fisher_exact(table))}
        except DegenerateInputError as exc:
            assoc[key] = {"table": [table.a, table.b, table.c, table.d], "error": str(exc)}
    stats["word_association"] = assoc
    write_json(out / "stats.json", stats)
    _finish(cfg, "report", inputs, started)


STAGE_FUNCS = {
    "process": stage_process,
    "matrix": stage_matrix,
    "embed": stage_embed,
    "distances": stage_distances,
    "graph": stage_graph,
    "report": stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig, force: bool = False,
              from_scratch: bool = False) -> None:
    """Run one stage, or with ``from_scratch`` every stage from ``process`` up to it."""
    if stage not in STAGE_FUNCS:
        raise PipelineError(f"unknown stage {stage!r}")
    cfg.output.mkdir(parents=True, exist_ok=True)
    order = list(STAGE_FUNCS)
    todo = order[:order.index(stage) + 1] if from_scratch else [stage]
    for s in todo:
        log.info("running %s", s)
        STAGE_FUNCS[s](cfg, force)


__all__ = ["STAGES", "OUTPUTS", "PipelineError", "MissingArtifactError", "StaleInputError",
           "run_stage", "compare_distances", "check_inputs", "sha256_file"]
