"""Write every connected graph on 8 vertices (up to isomorphism) in graph6.

Each 8-vertex graph is a 7-vertex graph plus one vertex, so extending the
networkx atlas by every neighbour subset covers all of them; duplicates are
removed with a WL-hash bucket and an exact isomorphism check.
"""

import sys
from itertools import combinations

import networkx as nx


def connected_graphs_8():
    buckets: dict[str, list[nx.Graph]] = {}
    base = [G for G in nx.graph_atlas_g() if G.number_of_nodes() == 7]
    for G in base:
        for r in range(1, 8):
            for nbrs in combinations(range(7), r):
                H = G.copy()
                H.add_edges_from((7, v) for v in nbrs)
                if not nx.is_connected(H):
                    continue
                key = nx.weisfeiler_lehman_graph_hash(H, iterations=3)
                bucket = buckets.setdefault(key, [])
                if not any(nx.is_isomorphic(H, K) for K in bucket):
                    bucket.append(H)
    return [G for bucket in buckets.values() for G in bucket]


if __name__ == "__main__":
    graphs = connected_graphs_8()
    lines = sorted(nx.to_graph6_bytes(G, header=False).decode().strip() for G in graphs)
    with open(sys.argv[1], "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(len(lines))
