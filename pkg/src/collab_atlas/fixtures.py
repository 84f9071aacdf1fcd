"""Synthetic corpus with planted topical clusters, used for offline runs and tests.

Twelve authors fall into three topical clusters of four. Each cluster draws
part of every abstract from its own word pool, which no other cluster
uses; the rest comes from a shared pool with a Zipf-like frequency profile.
Departments agree with the clusters except for two authors, so the
adjusted Rand index between them is high but below 1. Two co-authored
papers appear under two authors each, giving exact duplicate documents.
"""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .biblio import AuthorQuery, Corpus, PublicationRecord, persist_corpus

FIXTURE_SEED = 1729
FIXTURE_DATE = datetime(2024, 1, 1, tzinfo=timezone.utc)

SHARED_WORDS = """
cell patient protein gene expression tissue model analysis response level
sample cohort clinical disease receptor pathway signal growth mechanism function
factor study treatment risk outcome population control method data effect
marker region activity structure process development role network variation change
measurement imaging dose trial assay culture membrane channel regulation sequence
mutation variant genome transcription binding interaction complex domain enzyme kinase
antibody antigen tumor cancer infection virus bacteria host immunity inflammation
blood plasma serum liver kidney heart lung brain muscle bone
mouse rat zebrafish primate human adult child infant female male
survival mortality incidence prevalence exposure association estimate regression variance
""".split()

CLUSTER_WORDS = {
    "neuro": """
synapse neuron axon dendrite cortex hippocampus glia astrocyte myelin neurotransmitter
dopamine serotonin glutamate plasticity memory cognition seizure epilepsy neurodegeneration
amyloid tau parkinson alzheimer neurite spine interneuron thalamus cerebellum
""".split(),
    "epi": """
epidemiology surveillance questionnaire smoking obesity diabetes hypertension socioeconomic
neighborhood disparity census registry attributable confounder propensity hazard
biostatistics longitudinal cross-sectional stratification screening vaccination pandemic
household income education rural urban
""".split(),
    "struct": """
crystallography cryo-em microscopy spectroscopy ligand conformation folding chaperone
ribosome polymerase nucleosome chromatin helix helicase peptide residue allostery
catalysis substrate inhibitor docking simulation thermodynamics kinetics fluorescence
lipid bilayer
""".split(),
}

AUTHORS = [
    # author_id, display name, cluster, department
    ("A01", "Ada Neuron", "neuro", "Neuroscience"),
    ("A02", "Ben Axon", "neuro", "Neuroscience"),
    ("A03", "Cy Glia", "neuro", "Neuroscience"),
    ("A04", "Di Cortex", "neuro", "Structural Biology"),
    ("A05", "Ed Census", "epi", "Epidemiology"),
    ("A06", "Flo Cohort", "epi", "Epidemiology"),
    ("A07", "Gus Hazard", "epi", "Epidemiology"),
    ("A08", "Hal Registry", "epi", "Epidemiology"),
    ("A09", "Ivy Helix", "struct", "Structural Biology"),
    ("A10", "Jo Ligand", "struct", "Structural Biology"),
    ("A11", "Kit Folding", "struct", "Neuroscience"),
    ("A12", "Lu Ribosome", "struct", "Structural Biology"),
]

FILLER = ["the", "of", "and", "in", "we", "with", "for", "to", "was", "were", "this", "that"]

DOCS_PER_AUTHOR = 14
WORDS_PER_ABSTRACT = 60
TOPIC_SHARE = 0.35


def _abstract(rng: np.random.Generator, topic: list[str], shared_p: np.ndarray) -> tuple[str, str, list[str]]:
    words = []
    for _ in range(WORDS_PER_ABSTRACT):
        if rng.random() < TOPIC_SHARE:
            words.append(topic[rng.integers(len(topic))])
        else:
            words.append(SHARED_WORDS[rng.choice(len(SHARED_WORDS), p=shared_p)])
        if rng.random() < 0.3:
            words.append(FILLER[rng.integers(len(FILLER))])
    sentences, start = [], 0
    while start < len(words):
        stop = start + int(rng.integers(8, 15))
        sentences.append(" ".join(words[start:stop]).capitalize() + ".")
        start = stop
    title_words = [topic[i] for i in rng.choice(len(topic), 3, replace=False)]
    title = " ".join(["Study", "of"] + title_words)
    keywords = sorted(set(topic[i] for i in rng.choice(len(topic), 2, replace=False)))
    return title, " ".join(sentences), keywords


def fixture_corpus(seed: int = FIXTURE_SEED) -> Corpus:
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, len(SHARED_WORDS) + 1)
    shared_p = 1.0 / (ranks + 2.7) ** 1.1
    shared_p /= shared_p.sum()
    authors = [AuthorQuery(aid, name, f'"{name}"[Author]') for aid, name, _, _ in AUTHORS]
    records: list[PublicationRecord] = []
    serial = 100000
    for aid, name, cluster, _ in AUTHORS:
        for _ in range(DOCS_PER_AUTHOR):
            title, abstract, kw = _abstract(rng, CLUSTER_WORDS[cluster], shared_p)
            serial += 1
            records.append(PublicationRecord(str(serial), title, abstract, tuple(kw), (name,), aid))
    # co-authored papers: the same record listed under a second author
    for src, dst in (("A01", "A02"), ("A09", "A10")):
        rec = next(r for r in records if r.author_id == src)
        records.append(rec.with_author(dst))
    return Corpus(tuple(records), tuple(authors), FIXTURE_DATE)


def fixture_groups() -> dict[str, str]:
    return {aid: dept for aid, _, _, dept in AUTHORS}


def fixture_clusters() -> dict[str, str]:
    return {aid: cluster for aid, _, cluster, _ in AUTHORS}


FIXTURE_CONFIG = """\
# Pipeline configuration for the synthetic 12-author fixture.
[paths]
corpus = "corpus.json"
groups = "groups.csv"
output = "out"

[matrix]
vocab_size = 5000

[umap]
n_neighbors = 15
min_dist = 0.1
n_epochs = 200
d = 3
seed = 20240527
threads = 1

[ot]
p = 2
threads = 1
memory_budget_mb = 512
method = "exact"

[graph]
k = 3
louvain_replicates = 20
seed = 7
null_replicates = 200

[report]
top_words = 10
min_word_count = 5
word_pairs = [["synapse", "cohort"], ["patient", "cell"]]
"""


def write_fixture(directory: str | Path) -> Path:
    """Write corpus.json, queries.csv, groups.csv and atlas.toml; return the config path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    corpus = fixture_corpus()
    persist_corpus(corpus, d / "corpus.json")
    with open(d / "queries.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author_id", "display_name", "query"])
        for a in corpus.authors:
            w.writerow([a.author_id, a.display_name, a.query])
    with open(d / "groups.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author_id", "group"])
        for aid, group in fixture_groups().items():
            w.writerow([aid, group])
    cfg = d / "atlas.toml"
    cfg.write_text(FIXTURE_CONFIG, encoding="utf-8")
    return cfg
