from .build import AuthorGraph, build_author_graph, epsilon_threshold, knn_adjacency, symmetrize
from .export import graphml_schema_path, to_networkx, write_dot, write_graphml
from .louvain import (LouvainSummary, Partition, canonical_labels, louvain, louvain_replicates,
                      modularity)
from .metrics import (ClosenessResult, GroupDistance, NullSummary, adjusted_rand_index,
                      closeness_centrality, degree_stats, hop_distances, permutation_null,
                      within_cluster_distance)
from .words import EmptyClusterError, characteristic_words, pooled_counts, relative_excess

__all__ = [
    "AuthorGraph", "build_author_graph", "epsilon_threshold", "knn_adjacency", "symmetrize",
    "graphml_schema_path", "to_networkx", "write_dot", "write_graphml",
    "LouvainSummary", "Partition", "canonical_labels", "louvain", "louvain_replicates",
    "modularity", "ClosenessResult", "GroupDistance", "NullSummary", "adjusted_rand_index",
    "closeness_centrality", "degree_stats", "hop_distances", "permutation_null",
    "within_cluster_distance", "EmptyClusterError", "characteristic_words", "pooled_counts",
    "relative_excess",
]
