"""Weighted point patterns and distances between them."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ..embedding import TermEmbedding
from ..geometry import CondensedDistanceMatrix, angular_distance
from ..vocab import AuthorProfile, Vocabulary
from .simplex import solve_transport

log = logging.getLogger(__name__)


class PatternError(ValueError):
    pass


class SinkhornConvergenceError(RuntimeError):
    def __init__(self, residual: float, n_iter: int):
        super().__init__(f"Sinkhorn did not converge in {n_iter} iterations "
                         f"(marginal residual {residual:.3g})")
        self.residual = residual


class PairError(RuntimeError):
    def __init__(self, pair: tuple[str, str], cause: Exception):
        super().__init__(f"distance for pair {pair[0]!r}, {pair[1]!r} failed: {cause}")
        self.pair = pair


@dataclass
class WeightedPointPattern:
    points: np.ndarray
    masses: np.ndarray
    owner: str = ""
    ranks: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.masses = np.asarray(self.masses, dtype=float).ravel()
        if self.points.shape[0] != self.masses.size:
            raise PatternError("one mass per point is required")
        if self.masses.size == 0:
            raise PatternError(f"pattern {self.owner!r} is empty")
        if np.any(self.masses <= 0) or not np.all(np.isfinite(self.masses)):
            raise PatternError(f"pattern {self.owner!r} has non-positive or non-finite masses")
        if abs(self.masses.sum() - 1.0) > 1e-12:
            raise PatternError(f"pattern {self.owner!r} masses sum to {self.masses.sum()!r}, not 1")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.masses.size


@dataclass
class TransportPlan:
    flows: list[tuple[int, int, float]]
    cost: float

    def as_matrix(self, m: int, n: int) -> np.ndarray:
        P = np.zeros((m, n))
        for i, j, f in self.flows:
            P[i, j] += f
        return P


@dataclass(frozen=True)
class OtParams:
    p: int = 2
    sinkhorn_lambda: float = 10.0
    max_iter: int = 10000
    tol: float = 1e-9
    memory_budget: int = 512 * 2**20
    workers: int = 1

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")
        if self.sinkhorn_lambda <= 0:
            raise ValueError("sinkhorn_lambda must be positive")


def _normalize(masses: np.ndarray) -> np.ndarray:
    m = masses / masses.sum()
    # fold the rounding residue into the largest entry so the total is 1 to 1 ulp
    m[np.argmax(m)] += 1.0 - m.sum()
    return m


def make_point_pattern(profile: AuthorProfile, emb: TermEmbedding,
                       vocab: Vocabulary) -> WeightedPointPattern:
    """Place an author's term frequencies on the embedded term coordinates.

    Terms without an embedded point are dropped before normalizing.
    """
    where = {r: i for i, r in enumerate(emb.ranks)}
    ranks, counts = [], []
    for term, c in profile.term_counts.items():
        r = vocab.get_rank(term)
        if r is not None and r in where and c > 0:
            ranks.append(r)
            counts.append(c)
    if not ranks:
        raise PatternError(f"author {profile.author_id!r} has no terms in the embedding")
    order = np.argsort(ranks)
    ranks = np.asarray(ranks)[order]
    counts = np.asarray(counts, dtype=float)[order]
    points = emb.coords[[where[r] for r in ranks]]
    return WeightedPointPattern(points, _normalize(counts), profile.author_id, ranks)


def cost_matrix(x: np.ndarray, y: np.ndarray, p: int) -> np.ndarray:
    sq = (np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :] - 2.0 * x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    return sq if p == 2 else np.sqrt(sq)


def _check_pair(a: WeightedPointPattern, b: WeightedPointPattern) -> None:
    if a.dim != b.dim:
        raise PatternError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _order_key(pat: WeightedPointPattern) -> tuple:
    return (len(pat), pat.masses.tobytes(), pat.points.tobytes())


def wasserstein(a: WeightedPointPattern, b: WeightedPointPattern,
                params: OtParams = OtParams()) -> tuple[float, TransportPlan]:
    """Exact p-Wasserstein distance and an optimal plan.

    The distance is the p-th root of the minimal total cost with ground cost
    ``|x - y|^p``. Arguments are put in a canonical order before solving so
    ``wasserstein(a, b)`` and ``wasserstein(b, a)`` agree bit for bit. The
    cost matrix is materialized only when it fits ``params.memory_budget``
    split across the concurrent workers.
    """
    _check_pair(a, b)
    if _order_key(a) > _order_key(b):
        d, plan = wasserstein(b, a, params)
        return d, TransportPlan([(j, i, f) for i, j, f in plan.flows], plan.cost)
    if len(a) * len(b) * 8 <= params.memory_budget / max(1, params.workers):
        # direct differences keep coincident points at exactly zero cost
        diff = a.points[:, None, :] - b.points[None, :, :]
        C = np.einsum("ijk,ijk->ij", diff, diff)
        if params.p == 1:
            C = np.sqrt(C)
        total, rows, cols, flows, _ = solve_transport(a.masses, b.masses, cost=C, p=params.p)
    else:
        total, rows, cols, flows, _ = solve_transport(a.masses, b.masses, xs=a.points,
                                                      ys=b.points, p=params.p)
    total = max(total, 0.0)
    plan = TransportPlan([(int(i), int(j), float(f)) for i, j, f in zip(rows, cols, flows)], total)
    return total ** (1.0 / params.p), plan


def round_to_polytope(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project an approximate plan onto plans with marginals exactly ``a`` and ``b``."""
    row = P.sum(axis=1)
    P = P * np.minimum(a / np.where(row > 0, row, 1.0), 1.0)[:, None]
    col = P.sum(axis=0)
    P = P * np.minimum(b / np.where(col > 0, col, 1.0), 1.0)[None, :]
    err_r = a - P.sum(axis=1)
    err_c = b - P.sum(axis=0)
    total = err_r.sum()
    if total > 0:
        P = P + np.outer(err_r, err_c) / total
    return P


def sinkhorn(a: WeightedPointPattern, b: WeightedPointPattern,
             params: OtParams = OtParams()) -> float:
    """Entropic transport cost, evaluated without the entropy term.

    ``params.sinkhorn_lambda`` is the sharpness: the kernel is
    ``exp(-lambda * C)``, so larger values approach the exact solution.
    Scaling runs in the log domain. The final plan is rounded onto the
    transport polytope, so the returned value can never undercut the exact
    distance.
    """
    _check_pair(a, b)
    C = cost_matrix(a.points, b.points, params.p)
    logK = -params.sinkhorn_lambda * C
    log_a, log_b = np.log(a.masses), np.log(b.masses)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    residual = math.inf
    for it in range(1, params.max_iter + 1):
        f = log_a - logsumexp(logK + g[None, :], axis=1)
        g = log_b - logsumexp(logK + f[:, None], axis=0)
        if it % 10 == 0 or it == params.max_iter:
            P = np.exp(logK + f[:, None] + g[None, :])
            residual = float(np.abs(P.sum(axis=1) - a.masses).sum())
            if residual < params.tol:
                break
    else:
        raise SinkhornConvergenceError(residual, params.max_iter)
    P = round_to_polytope(np.exp(logK + f[:, None] + g[None, :]), a.masses, b.masses)
    return max(float(np.sum(P * C)), 0.0) ** (1.0 / params.p)


def pairwise_author_distances(patterns: Sequence[WeightedPointPattern],
                              params: OtParams = OtParams(),
                              method: str = "exact") -> CondensedDistanceMatrix:
    """Distances between all pattern pairs, solved independently.

    ``params.workers`` solves run concurrently (the simplex kernel releases
    the GIL); results are placed by pair index, so scheduling never matters.
    """
    if len(patterns) < 2:
        raise ValueError("need at least two patterns")
    n = len(patterns)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def solve(ij):
        i, j = ij
        try:
            if method == "exact":
                return wasserstein(patterns[i], patterns[j], params)[0]
            if method == "sinkhorn":
                return sinkhorn(patterns[i], patterns[j], params)
            raise ValueError(f"unknown method {method!r}")
        except Exception as exc:
            raise PairError((patterns[i].owner, patterns[j].owner), exc) from exc

    if params.workers > 1:
        with ThreadPoolExecutor(params.workers) as pool:
            values = list(pool.map(solve, pairs))
    else:
        values = [solve(ij) for ij in pairs]
    return CondensedDistanceMatrix(n, np.array(values), "author", [p.owner for p in patterns])


def direct_author_angular_distance(fa: AuthorProfile, fb: AuthorProfile,
                                   vocab: Vocabulary) -> float:
    """Angle between two authors' raw count vectors over ``vocab``."""
    xa = np.array([fa.term_counts.get(t, 0) for t in vocab.terms], dtype=float)
    xb = np.array([fb.term_counts.get(t, 0) for t in vocab.terms], dtype=float)
    if not xa.any() or not xb.any():
        empty = fa.author_id if not xa.any() else fb.author_id
        raise PatternError(f"author {empty!r} has an empty profile over the vocabulary")
    return angular_distance(xa, xb)


def pairwise_direct_distances(profiles: Sequence[AuthorProfile],
                              vocab: Vocabulary) -> CondensedDistanceMatrix:
    X = np.array([[p.term_counts.get(t, 0) for t in vocab.terms] for p in profiles], dtype=float)
    sq = np.einsum("ij,ij->i", X, X)
    if np.any(sq == 0):
        bad = profiles[int(np.flatnonzero(sq == 0)[0])].author_id
        raise PatternError(f"author {bad!r} has an empty profile over the vocabulary")
    cos = (X @ X.T) / np.sqrt(np.outer(sq, sq))
    D = np.arccos(np.clip(cos, -1.0, 1.0))
    np.fill_diagonal(D, 0.0)
    return CondensedDistanceMatrix.from_square(D, "author", [p.author_id for p in profiles])
