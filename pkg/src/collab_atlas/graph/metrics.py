"""Path-based statistics on author graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path


def hop_distances(adj: np.ndarray) -> np.ndarray:
    """All-pairs unweighted shortest-path lengths; ``inf`` where unreachable."""
    A = csr_matrix(np.asarray(adj) != 0)
    return shortest_path(A, directed=False, unweighted=True)


@dataclass
class ClosenessResult:
    values: dict[int, float]
    giant: list[bool]
    isolated: list[int]

    def mean_over(self, vertices, giant_only: bool = True) -> float:
        vals = [self.values[v] for v in vertices
                if v in self.values and (self.giant[v] or not giant_only)]
        return float(np.mean(vals)) if vals else float("nan")


def closeness_centrality(adj: np.ndarray) -> ClosenessResult:
    """Reciprocal of the summed hop distance to every vertex in the same component.

    Isolated vertices get no value. ``giant`` marks membership of the largest
    component (first one on ties), so callers can exclude small components.
    """
    A = np.asarray(adj)
    n = A.shape[0]
    D = hop_distances(A)
    n_comp, comp = connected_components(csr_matrix(A != 0), directed=False)
    sizes = np.bincount(comp, minlength=n_comp)
    giant_label = int(np.argmax(sizes))
    values, isolated = {}, []
    for v in range(n):
        row = D[v][np.isfinite(D[v])]
        total = row.sum()
        if total == 0:
            isolated.append(v)
        else:
            values[v] = 1.0 / total
    return ClosenessResult(values, [bool(c == giant_label) for c in comp], isolated)


@dataclass
class GroupDistance:
    mean: float
    n_pairs: int
    n_unreachable: int = 0
    singleton: bool = False


def _group_index(groups: Sequence[Hashable]) -> dict:
    out: dict = {}
    for v, g in enumerate(groups):
        out.setdefault(g, []).append(v)
    return out


def _group_mean(D: np.ndarray, members: Sequence[int], unreachable: str) -> GroupDistance:
    if len(members) < 2:
        return GroupDistance(float("nan"), 0, 0, True)
    idx = np.asarray(members)
    sub = D[np.ix_(idx, idx)][np.triu_indices(idx.size, 1)]
    finite = np.isfinite(sub)
    n_bad = int((~finite).sum())
    if n_bad and unreachable == "error":
        raise ValueError(f"{n_bad} group pairs are disconnected")
    vals = sub[finite]
    mean = float(vals.mean()) if vals.size else float("nan")
    return GroupDistance(mean, int(vals.size), n_bad)


def within_cluster_distance(adj: np.ndarray, groups: Sequence[Hashable],
                            unreachable: str = "exclude",
                            D: np.ndarray | None = None) -> dict:
    """Mean hop distance over all pairs sharing a group label.

    Paths may leave the group. Unreachable pairs are dropped (``exclude``)
    or raise (``error``). Singleton groups come back flagged with NaN.
    """
    if unreachable not in ("exclude", "error"):
        raise ValueError("unreachable must be 'exclude' or 'error'")
    if len(groups) != np.asarray(adj).shape[0]:
        raise ValueError("one group label per vertex is required")
    if D is None:
        D = hop_distances(adj)
    return {g: _group_mean(D, members, unreachable)
            for g, members in sorted(_group_index(groups).items(), key=lambda kv: str(kv[0]))}


@dataclass
class NullSummary:
    observed: float
    null_mean: float
    quantiles: dict[str, float]
    p_value: float
    samples: list[float] = field(default_factory=list, repr=False)


QUANTILES = (0.025, 0.05, 0.5, 0.95, 0.975)


def permutation_null(adj: np.ndarray, groups: Sequence[Hashable], n_reps: int = 500,
                     seed: int = 0) -> dict:
    """Compare within-group distances against uniformly shuffled labels.

    ``p_value`` is the fraction of shuffles whose group mean is at or below
    the observed one. Groups with fewer than two members are skipped.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    labels = list(groups)
    D = hop_distances(adj)
    observed = within_cluster_distance(adj, labels, D=D)
    keys = [g for g, s in observed.items() if not s.singleton]
    rng = np.random.default_rng(seed)
    arr = np.empty(len(labels), dtype=object)
    arr[:] = labels
    samples = {g: [] for g in keys}
    for _ in range(n_reps):
        perm = arr[rng.permutation(len(labels))]
        for g in keys:
            members = np.flatnonzero(perm == g)
            samples[g].append(_group_mean(D, members, "exclude").mean)
    out = {}
    for g in keys:
        s = np.asarray(samples[g])
        ok = s[np.isfinite(s)]
        obs = observed[g].mean
        q = {f"q{100 * x:g}": float(np.quantile(ok, x)) for x in QUANTILES} if ok.size else {}
        out[g] = NullSummary(obs, float(ok.mean()) if ok.size else float("nan"), q,
                             float(np.mean(ok <= obs)) if ok.size else float("nan"),
                             s.tolist())
    return out


def _comb2(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def adjusted_rand_index(p1: Sequence[Hashable] | Mapping, p2: Sequence[Hashable] | Mapping) -> float:
    """Chance-corrected agreement of two labelings of the same vertices.

    Accepts label sequences or vertex -> label mappings.
    """
    if isinstance(p1, Mapping) or isinstance(p2, Mapping):
        if not (isinstance(p1, Mapping) and isinstance(p2, Mapping)) or set(p1) != set(p2):
            raise ValueError("partitions cover different vertex sets")
        order = sorted(p1, key=str)
        p1 = [p1[v] for v in order]
        p2 = [p2[v] for v in order]
    if len(p1) != len(p2):
        raise ValueError("partitions cover different vertex sets")
    n = len(p1)
    _, a = np.unique(np.asarray(p1, dtype=str), return_inverse=True)
    _, b = np.unique(np.asarray(p2, dtype=str), return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1)
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    expected = sa * sb / _comb2(n) if n > 1 else 0.0
    best = (sa + sb) / 2
    if best == expected:
        return 1.0
    return float((index - expected) / (best - expected))


def degree_stats(adj: np.ndarray) -> tuple[int, int, float]:
    deg = (np.asarray(adj) != 0).sum(axis=1)
    return int(deg.min()), int(deg.max()), float(deg.mean())
