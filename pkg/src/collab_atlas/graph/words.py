"""Words that set a cluster apart from the whole corpus."""

from __future__ import annotations

from collections import Counter
from typing import Hashable, Iterable, Mapping

from ..vocab import AuthorProfile


class EmptyClusterError(ValueError):
    pass


def relative_excess(fi: float, f: float) -> float:
    return (fi - f) / f


def pooled_counts(profiles: Iterable[AuthorProfile | Mapping[str, int]]) -> Counter:
    pool: Counter = Counter()
    for p in profiles:
        pool.update(p.term_counts if isinstance(p, AuthorProfile) else p)
    return pool


def characteristic_words(cluster_profiles: Mapping[Hashable, list],
                         global_freq: Mapping[str, int] | None = None,
                         top_m: int = 10, min_count: int = 5) -> dict:
    """Rank each cluster's words by ``(f_i - f) / f``.

    ``f_i`` is the word's share of the cluster's pooled counts and ``f`` its
    share of ``global_freq`` (by default the pool of every profile given).
    Words with a global count under ``min_count`` are not eligible. Ties are
    ordered alphabetically.
    """
    pools = {}
    for c, members in cluster_profiles.items():
        pool = pooled_counts(members)
        if not members or sum(pool.values()) == 0:
            raise EmptyClusterError(f"cluster {c!r} has no words")
        pools[c] = pool
    if global_freq is None:
        global_freq = pooled_counts(pools.values())
    g_total = sum(global_freq.values())
    out = {}
    for c, pool in pools.items():
        total = sum(pool.values())
        scored = []
        for w, cnt in pool.items():
            g = global_freq.get(w, 0)
            if g < min_count or g == 0:
                continue
            # (f_i - f) / f from integer counts: one rounding, so equal ratios tie exactly
            scored.append((w, (cnt * g_total - total * g) / (total * g)))
        scored.sort(key=lambda ws: (-ws[1], ws[0]))
        out[c] = scored[:top_m]
    return out
