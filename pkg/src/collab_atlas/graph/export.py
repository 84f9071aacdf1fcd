"""GraphML and DOT serialization of author graphs."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import networkx as nx

from .build import AuthorGraph

GRAPHML_XSD = "graphml.xsd"


def graphml_schema_path() -> Path:
    return Path(str(resources.files("collab_atlas") / "data" / GRAPHML_XSD))


def to_networkx(graph: AuthorGraph, attrs: Mapping[str, Sequence] | None = None) -> nx.Graph:
    """Undirected graph with node ids ``n0..n{k}`` and ``author_id`` plus ``attrs`` per node.

    ``attrs`` maps an attribute name to one value per vertex (e.g.
    ``display_name``, ``group``, ``cluster``, ``n_abstracts``).
    """
    attrs = dict(attrs or {})
    for name, values in attrs.items():
        if len(values) != graph.n:
            raise ValueError(f"attribute {name!r} needs one value per vertex")
    G = nx.Graph(epsilon=float(graph.epsilon), k=int(graph.k))
    for v, author in enumerate(graph.vertices):
        data = {"author_id": author}
        for name, values in attrs.items():
            val = values[v]
            data[name] = val.item() if hasattr(val, "item") else val
        G.add_node(f"n{v}", **data)
    for u, v in graph.edges():
        G.add_edge(f"n{u}", f"n{v}")
    return G


def write_graphml(graph: AuthorGraph, path, attrs=None) -> None:
    nx.write_graphml(to_networkx(graph, attrs), str(path), encoding="utf-8")


def _dot_quote(value) -> str:
    s = str(value).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{s}"'


def write_dot(graph: AuthorGraph, path, attrs=None) -> None:
    G = to_networkx(graph, attrs)
    lines = ["graph authors {"]
    lines.append(f"  graph [epsilon={_dot_quote(repr(graph.epsilon))}, k={graph.k}];")
    for node, data in G.nodes(data=True):
        body = ", ".join(f"{k}={_dot_quote(v)}" for k, v in data.items())
        lines.append(f"  {node} [{body}];")
    for u, v in G.edges():
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
