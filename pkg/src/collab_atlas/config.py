"""Pipeline configuration read from a TOML file."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .embedding import UmapParams
from .transport import OtParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GraphParams:
    k: int = 3
    louvain_replicates: int = 20
    seed: int = 0
    null_replicates: int = 500

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("graph.k must be at least 1")
        if self.louvain_replicates < 1 or self.null_replicates < 1:
            raise ConfigError("replicate counts must be positive")


@dataclass(frozen=True)
class ReportParams:
    top_words: int = 10
    min_word_count: int = 5
    word_pairs: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class PipelineConfig:
    corpus: Path
    output: Path
    exclusions: Path | None = None
    groups: Path | None = None
    vocab_size: int = 5000
    min_count: int = 1
    umap: UmapParams = field(default_factory=UmapParams)
    ot: OtParams = field(default_factory=OtParams)
    ot_method: str = "exact"
    graph: GraphParams = field(default_factory=GraphParams)
    report: ReportParams = field(default_factory=ReportParams)
    source: Path | None = None

    def __post_init__(self):
        if self.vocab_size < 100:
            raise ConfigError("vocab_size must be at least 100")
        if self.ot_method not in ("exact", "sinkhorn"):
            raise ConfigError(f"unknown ot.method {self.ot_method!r}")

    def stage_params(self, stage: str) -> dict:
        """Parameters that determine a stage's outputs (recorded in its manifest)."""
        params = {
            "fetch": {},
            "process": {"min_count": self.min_count,
                        "exclusions": str(self.exclusions) if self.exclusions else None},
            "matrix": {"vocab_size": self.vocab_size},
            "embed": asdict(self.umap),
            "distances": {**asdict(self.ot), "method": self.ot_method},
            "graph": asdict(self.graph),
            "report": {**asdict(self.report), "graph": asdict(self.graph)},
        }[stage]
        return {k: (list(map(list, v)) if k == "word_pairs" else v) for k, v in params.items()}


def _section(data: dict, name: str) -> dict:
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _build(cls, values: dict, section: str, rename: dict | None = None):
    rename = rename or {}
    kwargs = {}
    for key, value in values.items():
        kwargs[rename.get(key, key)] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file; relative paths resolve against the file's directory.

    ``overrides`` maps dotted keys (``"ot.threads"``) to values and wins
    over the file.
    """
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for dotted, value in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        data.setdefault(sec, {})[key] = value
    base = path.resolve().parent

    def resolve(p):
        if p in (None, ""):
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    paths = _section(data, "paths")
    if "corpus" not in paths:
        raise ConfigError("[paths] corpus is required")
    umap_sec = dict(_section(data, "umap"))
    ot_sec = dict(_section(data, "ot"))
    method = ot_sec.pop("method", "exact")
    if "memory_budget_mb" in ot_sec:
        ot_sec["memory_budget"] = int(ot_sec.pop("memory_budget_mb") * 2**20)
    report = dict(_section(data, "report"))
    report["word_pairs"] = tuple(tuple(p) for p in report.get("word_pairs", ()))
    for pair in report["word_pairs"]:
        if len(pair) != 2:
            raise ConfigError("[report] word_pairs entries must have two words")
    matrix = _section(data, "matrix")
    process = _section(data, "process")
    return PipelineConfig(
        corpus=resolve(paths["corpus"]),
        output=resolve(paths.get("output", "out")),
        exclusions=resolve(paths.get("exclusions")),
        groups=resolve(paths.get("groups")),
        vocab_size=int(matrix.get("vocab_size", 5000)),
        min_count=int(process.get("min_count", 1)),
        umap=_build(UmapParams, umap_sec, "umap", {"threads": "layout_threads"}),
        ot=_build(OtParams, ot_sec, "ot", {"threads": "workers"}),
        ot_method=method,
        graph=_build(GraphParams, _section(data, "graph"), "graph"),
        report=_build(ReportParams, report, "report"),
        source=path,
    )
