"""Researcher similarity networks from publication abstracts.

Terms are embedded from their co-occurrence geometry, each author becomes a
weighted point pattern over the embedded terms, and exact Wasserstein
distances between those patterns define a k-nearest-neighbour graph.
"""

__version__ = "0.1.0"
