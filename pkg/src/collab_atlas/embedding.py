"""UMAP layout of points given only a precomputed distance matrix.

The k-nearest-neighbour graph is found by an exact scan of the condensed
matrix, turned into a fuzzy simplicial set, and laid out by negative-sampling
SGD. Each epoch applies all sampled edge updates against the positions from
the start of that epoch, so a run is a pure function of its inputs and seed.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from .geometry import CondensedDistanceMatrix

SMOOTH_K_TOLERANCE = 1e-5
MIN_K_DIST_SCALE = 1e-3


@dataclass(frozen=True)
class UmapParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int = 500
    d: int = 3
    seed: int = 20240527
    spread: float = 1.0
    negative_sample_rate: int = 5
    learning_rate: float = 1.0
    layout_threads: int = 1

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be at least 2")
        if self.d < 2:
            raise ValueError("output dimension must be at least 2")
        if self.n_epochs < 1:
            raise ValueError("n_epochs must be positive")


@dataclass
class TermEmbedding:
    ranks: list[int]
    coords: np.ndarray
    seed: int

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def lookup(self) -> dict[int, np.ndarray]:
        return {r: self.coords[i] for i, r in enumerate(self.ranks)}

    def to_csv(self, path: str | Path, terms: list[str] | None = None) -> None:
        """Write ``term,rank,x1..xd``; ``terms[rank-1]`` names each point."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", "rank"] + [f"x{i + 1}" for i in range(self.dim)])
            for r, xs in zip(self.ranks, self.coords):
                term = terms[r - 1] if terms is not None else ""
                w.writerow([term, r] + [repr(float(v)) for v in xs])

    @classmethod
    def from_csv(cls, path: str | Path, seed: int = -1) -> "TermEmbedding":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        body = rows[1:]
        ranks = [int(r[1]) for r in body]
        coords = np.array([[float(v) for v in r[2:]] for r in body], dtype=float)
        return cls(ranks, coords.reshape(len(body), len(rows[0]) - 2), seed)


def exact_knn(dist: CondensedDistanceMatrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the ``k`` nearest other points; ties go to lower index."""
    n = dist.n
    idx = np.empty((n, k), dtype=np.int64)
    dst = np.empty((n, k))
    for i in range(n):
        row = dist.row(i)
        row[i] = np.inf
        order = np.argsort(row, kind="stable")[:k]
        idx[i] = order
        dst[i] = row[order]
    return idx, dst


def smooth_knn_dist(knn_dist: np.ndarray, n_iter: int = 64,
                    bandwidth: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-point ``sigma`` and ``rho`` so the fuzzy degrees sum to ``log2(k)``.

    Solved for all points at once by vectorized bisection.
    """
    n, k = knn_dist.shape
    target = np.log2(k) * bandwidth
    positive = np.where(knn_dist > 0, knn_dist, np.inf)
    rho = positive.min(axis=1)
    rho[~np.isfinite(rho)] = 0.0
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    for _ in range(n_iter):
        gaps = np.maximum(knn_dist - rho[:, None], 0.0)
        psum = np.exp(-gaps / mid[:, None]).sum(axis=1)
        done = np.abs(psum - target) < SMOOTH_K_TOLERANCE
        if done.all():
            break
        over = psum > target
        hi = np.where(over & ~done, mid, hi)
        lo = np.where(~over & ~done, mid, lo)
        mid = np.where(done, mid, np.where(np.isfinite(hi), (lo + hi) / 2, mid * 2))
    mean_all = knn_dist.mean()
    mean_row = knn_dist.mean(axis=1)
    floor = np.where(rho > 0, MIN_K_DIST_SCALE * mean_row, MIN_K_DIST_SCALE * mean_all)
    sigma = np.maximum(mid, floor)
    return sigma, rho


def fuzzy_simplicial_set(dist: CondensedDistanceMatrix, n_neighbors: int) -> sp.csr_matrix:
    """Symmetric fuzzy membership graph (probabilistic t-conorm of both directions)."""
    if n_neighbors >= dist.n:
        raise ValueError(f"n_neighbors={n_neighbors} must be smaller than the {dist.n} points")
    if not np.all(np.isfinite(dist.values)):
        raise ValueError("distance matrix contains non-finite values")
    idx, dst = exact_knn(dist, n_neighbors)
    sigma, rho = smooth_knn_dist(dst)
    w = np.exp(-np.maximum(dst - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(dist.n), n_neighbors)
    W = sp.csr_matrix((w.ravel(), (rows, idx.ravel())), shape=(dist.n, dist.n))
    Wt = W.T.tocsr()
    P = W + Wt - W.multiply(Wt)
    P.eliminate_zeros()
    return P.tocsr()


def find_ab_params(spread: float, min_dist: float) -> tuple[float, float]:
    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


def _component_spectral(graph: sp.csr_matrix, dim: int, rng: np.random.Generator) -> np.ndarray | None:
    n = graph.shape[0]
    if n <= dim + 2:
        return None
    deg = np.asarray(graph.sum(axis=1)).ravel()
    dinv = sp.diags(1.0 / np.sqrt(deg))
    S = dinv @ graph @ dinv
    try:
        vals, vecs = eigsh(S, k=dim + 1, which="LA", v0=rng.uniform(size=n),
                           tol=1e-8, maxiter=n * 20)
    except Exception:  # ARPACK non-convergence
        return None
    order = np.argsort(vals)[::-1]
    return vecs[:, order[1:dim + 1]]


def spectral_init(graph: sp.csr_matrix, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Spectral coordinates per connected component, components spread apart.

    Components too small for an eigendecomposition get random coordinates.
    """
    n = graph.shape[0]
    n_comp, comp = connected_components(graph, directed=False)
    if n_comp == 1:
        init = _component_spectral(graph, dim, rng)
        if init is None:
            init = rng.uniform(-1.0, 1.0, size=(n, dim))
        return init * (10.0 / np.abs(init).max())
    Y = np.empty((n, dim))
    centers = rng.normal(size=(n_comp, dim))
    centers *= 10.0 / np.abs(centers).max()
    for c in range(n_comp):
        members = np.flatnonzero(comp == c)
        sub = _component_spectral(graph[members][:, members], dim, rng)
        if sub is None:
            sub = rng.uniform(-1.0, 1.0, size=(members.size, dim))
        sub = sub / max(np.abs(sub).max(), 1e-12)
        Y[members] = centers[c] + sub
    return Y


def _edge_deltas(Y, head, tail, neg_head, neg_tail, a, b, alpha):
    n, d = Y.shape
    delta = np.zeros_like(Y)
    diff = Y[head] - Y[tail]
    d2 = np.einsum("ij,ij->i", diff, diff)
    coeff = np.zeros_like(d2)
    pos = d2 > 0
    coeff[pos] = (-2.0 * a * b * d2[pos] ** (b - 1.0)) / (a * d2[pos] ** b + 1.0)
    grad = np.clip(coeff[:, None] * diff, -4.0, 4.0) * alpha
    np.add.at(delta, head, grad)
    np.add.at(delta, tail, -grad)

    ndiff = Y[neg_head] - Y[neg_tail]
    nd2 = np.einsum("ij,ij->i", ndiff, ndiff)
    ncoeff = (2.0 * b) / ((0.001 + nd2) * (a * nd2 ** b + 1.0))
    ngrad = np.where((nd2 > 0)[:, None], np.clip(ncoeff[:, None] * ndiff, -4.0, 4.0), 4.0)
    ngrad[neg_head == neg_tail] = 0.0
    np.add.at(delta, neg_head, ngrad * alpha)
    return delta


def optimize_layout(Y: np.ndarray, graph: sp.csr_matrix, params: UmapParams,
                    rng: np.random.Generator) -> np.ndarray:
    a, b = find_ab_params(params.spread, params.min_dist)
    coo = graph.tocoo()
    weights = coo.data
    keep = weights >= weights.max() / params.n_epochs
    head, tail, weights = coo.row[keep], coo.col[keep], weights[keep]
    eps = weights.max() / weights
    eps_neg = eps / params.negative_sample_rate
    next_pos = eps.copy()
    next_neg = eps_neg.copy()
    n = Y.shape[0]
    threads = max(1, params.layout_threads)
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for epoch in range(params.n_epochs):
            alpha = params.learning_rate * (1.0 - epoch / params.n_epochs)
            active = np.flatnonzero(next_pos <= epoch)
            if active.size == 0:
                continue
            n_neg = np.floor((epoch - next_neg[active]) / eps_neg[active]).astype(np.int64)
            n_neg = np.maximum(n_neg, 0)
            next_pos[active] += eps[active]
            next_neg[active] += n_neg * eps_neg[active]
            neg_head = np.repeat(head[active], n_neg)
            neg_tail = rng.integers(0, n, size=neg_head.size)
            if pool is None:
                delta = _edge_deltas(Y, head[active], tail[active], neg_head, neg_tail, a, b, alpha)
            else:
                pos_chunks = np.array_split(np.arange(active.size), threads)
                neg_chunks = np.array_split(np.arange(neg_head.size), threads)
                jobs = [
                    pool.submit(_edge_deltas, Y, head[active[pc]], tail[active[pc]],
                                neg_head[nc], neg_tail[nc], a, b, alpha)
                    for pc, nc in zip(pos_chunks, neg_chunks)
                ]
                delta = sum(j.result() for j in jobs)
            Y = Y + delta
    finally:
        if pool is not None:
            pool.shutdown()
    return Y


def umap_embed(dist: CondensedDistanceMatrix, params: UmapParams = UmapParams()) -> TermEmbedding:
    """Embed the points of ``dist`` in ``params.d`` dimensions."""
    graph = fuzzy_simplicial_set(dist, params.n_neighbors)
    rng = np.random.default_rng(params.seed)
    init = spectral_init(graph, params.d, rng)
    init = init + rng.normal(scale=1e-4, size=init.shape)
    span = init.max(axis=0) - init.min(axis=0)
    span[span == 0] = 1.0
    Y = 10.0 * (init - init.min(axis=0)) / span
    Y = optimize_layout(Y, graph, params, rng)
    return TermEmbedding([int(r) for r in dist.labels], Y, params.seed)


def trustworthiness(dist: CondensedDistanceMatrix, coords: np.ndarray, k: int = 15) -> float:
    """Share of embedded-space neighbours that were also near in the input space.

    1 means every embedded k-neighbourhood is a true neighbourhood.
    """
    n = dist.n
    if k >= n / 2:
        raise ValueError("k must be below n/2")
    coords = np.asarray(coords, dtype=float)
    penalty = 0.0
    for i in range(n):
        row = dist.row(i)
        row[i] = np.inf
        order = np.argsort(row, kind="stable")
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(1, n + 1)
        e = np.sum((coords - coords[i]) ** 2, axis=1)
        e[i] = np.inf
        nbrs = np.argsort(e, kind="stable")[:k]
        r = rank[nbrs]
        penalty += np.sum(np.maximum(r - k, 0))
    return 1.0 - penalty * 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0))
