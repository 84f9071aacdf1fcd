"""Louvain modularity maximization on small undirected graphs."""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit


@dataclass
class Partition:
    assignment: list[int]
    modularity: float

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment))

    def communities(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for v, c in enumerate(self.assignment):
            groups.setdefault(c, []).append(v)
        return [groups[c] for c in sorted(groups)]


@dataclass
class LouvainSummary:
    best: Partition
    community_counts: dict[int, int] = field(default_factory=dict)
    replicate_q: list[float] = field(default_factory=list)


def canonical_labels(labels) -> list[int]:
    """Relabel communities 0, 1, ... in order of first appearance."""
    seen: dict[int, int] = {}
    return [seen.setdefault(c, len(seen)) for c in labels]


def modularity(adj: np.ndarray, assignment) -> float:
    """Newman modularity ``sum_c e_c/m - (d_c/2m)^2`` of a symmetric (weighted) graph."""
    A = np.asarray(adj, dtype=float)
    two_m = A.sum()
    if two_m == 0:
        return 0.0
    _, labels = np.unique(np.asarray(assignment), return_inverse=True)
    labels = labels.ravel()
    S = np.zeros((A.shape[0], labels.max() + 1))
    S[np.arange(A.shape[0]), labels] = 1.0
    internal = np.einsum("ij,ic,jc->", A, S, S) if A.shape[0] <= 64 else np.trace(S.T @ A @ S)
    deg = S.T @ A.sum(axis=1)
    return float(internal / two_m - np.sum((deg / two_m) ** 2))


@njit(cache=True)
def _splitmix(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _one_level(W, seed, temperature):
    """Local-moving phase: returns raw community labels and whether anything moved."""
    n = W.shape[0]
    two_m = W.sum()
    k = np.empty(n)
    for i in range(n):
        k[i] = W[i].sum()
    comm = np.arange(n)
    tot = k.copy()
    links = np.zeros(n)
    touched = np.empty(n, np.int64)
    order = np.arange(n)
    state = np.uint64(seed)
    moved_any = False
    improved = True
    while improved:
        improved = False
        for q in range(n - 1, 0, -1):
            state, z = _splitmix(state)
            r = np.int64(z % np.uint64(q + 1))
            order[q], order[r] = order[r], order[q]
        for i in order:
            ci = comm[i]
            tot[ci] -= k[i]
            nt = 0
            for j in range(n):
                if j != i and W[i, j] != 0.0:
                    c = comm[j]
                    if links[c] == 0.0:
                        touched[nt] = c
                        nt += 1
                    links[c] += W[i, j]
            best_c = ci
            stay = links[ci] - tot[ci] * k[i] / two_m
            best_gain = stay
            # visit candidate communities in label order for determinism
            touched[:nt].sort()
            for t in range(nt):
                c = touched[t]
                gain = links[c] - tot[c] * k[i] / two_m
                if gain > best_gain + 1e-12:
                    best_c = c
                    best_gain = gain
            if temperature > 0.0 and best_c != ci:
                # sample an improving move, weighted by exp(gain / temperature)
                wsum = 0.0
                for t in range(nt):
                    c = touched[t]
                    gain = links[c] - tot[c] * k[i] / two_m
                    if gain > stay + 1e-12:
                        wsum += np.exp((gain - best_gain) / temperature)
                state, z = _splitmix(state)
                u = (z >> np.uint64(11)) * (1.0 / 9007199254740992.0) * wsum
                for t in range(nt):
                    c = touched[t]
                    gain = links[c] - tot[c] * k[i] / two_m
                    if gain > stay + 1e-12:
                        u -= np.exp((gain - best_gain) / temperature)
                        if u <= 0.0:
                            best_c = c
                            break
            for t in range(nt):
                links[touched[t]] = 0.0
            comm[i] = best_c
            tot[best_c] += k[i]
            if best_c != ci:
                improved = True
                moved_any = True
    return comm, moved_any


def _aggregate(A: np.ndarray, labels: np.ndarray) -> np.ndarray:
    S = np.zeros((A.shape[0], labels.max() + 1))
    S[np.arange(A.shape[0]), labels] = 1.0
    return S.T @ A @ S


def _coarsen(A: np.ndarray, membership: np.ndarray, rng: np.random.Generator,
             temperature: float = 0.0) -> np.ndarray:
    W = _aggregate(A, membership)
    while True:
        raw, moved = _one_level(W, int(rng.integers(2**63)), temperature)
        if not moved:
            return membership
        labels = np.array(canonical_labels(raw.tolist()))
        membership = labels[membership]
        W = _aggregate(W, labels)


@njit(cache=True)
def _vertex_mover_kernel(indptr, indices, weights, labels):
    n = labels.shape[0]
    k = np.zeros(n)
    for i in range(n):
        for t in range(indptr[i], indptr[i + 1]):
            k[i] += weights[t]
    two_m = k.sum()
    links = np.zeros((n, n))
    tot = np.zeros(n)
    for i in range(n):
        tot[labels[i]] += k[i]
        for t in range(indptr[i], indptr[i + 1]):
            links[i, labels[indices[t]]] += weights[t]
    locked = np.zeros(n, np.bool_)
    moved_v = np.empty(n, np.int64)
    moved_from = np.empty(n, np.int64)
    n_moves = 0
    cum = 0.0
    best = 0.0
    best_len = 0
    for _ in range(n):
        first_empty = -1
        for c in range(n):
            if tot[c] == 0.0:
                first_empty = c
                break
        bi = -1
        bc = -1
        bg = -np.inf
        for i in range(n):
            if locked[i]:
                continue
            a = labels[i]
            # a non-adjacent community never beats an empty one, so only
            # neighbours' communities and the first empty label are scored
            for t in range(indptr[i], indptr[i + 1] + 1):
                if t < indptr[i + 1]:
                    c = labels[indices[t]]
                else:
                    c = first_empty
                if c == a or c < 0:
                    continue
                g = (2.0 / two_m) * (links[i, c] - links[i, a]) \
                    - (2.0 * k[i] / two_m ** 2) * (tot[c] - tot[a] + k[i])
                if g > bg or (g == bg and (i < bi or (i == bi and c < bc))):
                    bg = g
                    bi = i
                    bc = c
        if bi == -1:
            break
        a = labels[bi]
        moved_v[n_moves] = bi
        moved_from[n_moves] = a
        n_moves += 1
        cum += bg
        labels[bi] = bc
        tot[a] -= k[bi]
        tot[bc] += k[bi]
        for t in range(indptr[bi], indptr[bi + 1]):
            j = indices[t]
            links[j, a] -= weights[t]
            links[j, bc] += weights[t]
        locked[bi] = True
        if cum > best + 1e-12:
            best = cum
            best_len = n_moves
    for t in range(n_moves - 1, best_len - 1, -1):
        labels[moved_v[t]] = moved_from[t]
    return labels, best


def _csr_parts(A: np.ndarray):
    rows, cols = np.nonzero(A)
    indptr = np.zeros(A.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=A.shape[0]), out=indptr[1:])
    return indptr, cols.astype(np.int64), A[rows, cols].astype(np.float64)


def _vertex_mover(csr, membership: np.ndarray) -> tuple[np.ndarray, float]:
    """One Kernighan-Lin pass of single-vertex moves on the original graph.

    Every vertex moves exactly once, each time to the best target (an empty
    community included) even when the gain is negative; the pass is then
    cut back to its best prefix. Returns the new labels and the Q gained.
    """
    labels, gained = _vertex_mover_kernel(*csr, membership.astype(np.int64).copy())
    return np.array(canonical_labels(labels.tolist())), gained


def _merge_and_move(A: np.ndarray, csr, membership: np.ndarray) -> np.ndarray | None:
    """Merge each pair of linked communities, polish with a vertex-mover pass,
    and return the first result that beats the current modularity."""
    q0 = modularity(A, membership)
    n_comm = membership.max() + 1
    S = np.zeros((A.shape[0], n_comm))
    S[np.arange(A.shape[0]), membership] = 1.0
    between = S.T @ A @ S
    for a in range(n_comm):
        for b in range(a + 1, n_comm):
            if between[a, b] == 0:
                continue
            merged = np.where(membership == b, a, membership)
            cand, _ = _vertex_mover(csr, np.array(canonical_labels(merged.tolist())))
            if modularity(A, cand) > q0 + 1e-12:
                return cand
    return None


def louvain(adj: np.ndarray, seed: int | np.random.SeedSequence | None = 0,
            refine: bool = True, temperature: float = 0.0) -> Partition:
    """Two-phase Louvain: local moves, then aggregation, until nothing moves.

    Vertex visiting order is shuffled with ``seed``; with ``temperature`` > 0
    each vertex picks among improving moves with weight exp(gain / T)
    instead of always taking the best one. With ``refine`` the result is
    polished by Kernighan-Lin vertex-mover passes, then by merge-and-move
    trials, and coarsening resumes from every improved partition until
    nothing gains. An edgeless graph yields all singletons with Q = 0.
    """
    A = np.asarray(adj, dtype=float)
    n = A.shape[0]
    if A.sum() == 0:
        return Partition(list(range(n)), 0.0)
    rng = np.random.default_rng(seed)
    membership = _coarsen(A, np.arange(n), rng, temperature)
    csr = _csr_parts(A) if refine else None
    while refine:
        refined, gained = _vertex_mover(csr, membership)
        if gained <= 1e-12:
            refined = _merge_and_move(A, csr, membership)
            if refined is None:
                break
        membership = _coarsen(A, refined, rng, temperature)
    assignment = canonical_labels(membership.tolist())
    return Partition(assignment, modularity(A, assignment))


def louvain_replicates(adj: np.ndarray, n_reps: int = 20, seed: int = 0,
                       workers: int = 1, temperature: float = 1.0) -> LouvainSummary:
    """Run seeded replicates; keep the highest-Q partition (first one on ties).

    The first replicate is plain greedy; the others sample moves at
    ``temperature`` so the set explores more than one local optimum.
    """
    seeds = np.random.SeedSequence(seed).spawn(n_reps)
    temps = [0.0] + [temperature] * (n_reps - 1)

    def run(i):
        return louvain(adj, seeds[i], temperature=temps[i])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_reps)))
    else:
        parts = [run(i) for i in range(n_reps)]
    best = parts[0]
    for p in parts[1:]:
        if p.modularity > best.modularity + 1e-12:
            best = p
    counts = Counter(p.n_communities for p in parts)
    return LouvainSummary(best, dict(sorted(counts.items())), [p.modularity for p in parts])
