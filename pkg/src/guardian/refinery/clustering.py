"""Density clustering over mutual-reachability distances.

HDBSCAN-style: core distances smooth the metric, a minimum spanning tree
captures the density hierarchy, and the largest significant edge-weight gap
separates clusters from sparser links. Components smaller than the minimum
cluster size are labeled outliers (-1). No cluster count is preset.
"""

from __future__ import annotations

import numpy as np

GAP_FRACTION = 0.25  # a gap this share of the weight span splits the tree


def _prim_mst(weights: np.ndarray) -> list[tuple[float, int, int]]:
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=int)
    in_tree[0] = True
    np.minimum(best, weights[0], out=best)
    best_from[:] = 0
    edges = []
    for _ in range(n - 1):
        candidates = np.where(~in_tree, best, np.inf)
        nxt = int(np.argmin(candidates))
        edges.append((float(best[nxt]), int(best_from[nxt]), nxt))
        in_tree[nxt] = True
        closer = weights[nxt] < best
        update = closer & ~in_tree
        best[update] = weights[nxt][update]
        best_from[update] = nxt
    return edges


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        self.parent[self.find(a)] = self.find(b)


def cluster_labels(points: np.ndarray, min_cluster_size: int) -> np.ndarray:
    """Cluster labels per row; -1 marks outliers."""
    n = points.shape[0]
    if n < min_cluster_size:
        return np.full(n, -1)

    diff = points[:, None, :] - points[None, :, :]
    distances = np.sqrt((diff * diff).sum(axis=-1))

    k = min(min_cluster_size, n - 1)
    sorted_rows = np.sort(distances, axis=1)  # column 0 is the self distance
    core = sorted_rows[:, k]
    mutual = np.maximum(distances, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mutual, 0.0)

    edges = sorted(_prim_mst(mutual))
    weights = [w for w, _, _ in edges]
    span = weights[-1] - weights[0]
    threshold = weights[-1]
    if span > 0:
        gaps = [(weights[i + 1] - weights[i], i) for i in range(len(weights) - 1)]
        largest, at = max(gaps)
        if largest >= GAP_FRACTION * span:
            threshold = weights[at]

    uf = _UnionFind(n)
    for weight, a, b in edges:
        if weight <= threshold:
            uf.union(a, b)

    roots: dict[int, list[int]] = {}
    for i in range(n):
        roots.setdefault(uf.find(i), []).append(i)

    labels = np.full(n, -1)
    next_label = 0
    for root in sorted(roots, key=lambda r: min(roots[r])):
        members = roots[root]
        if len(members) >= min_cluster_size:
            for m in members:
                labels[m] = next_label
            next_label += 1
    return labels
