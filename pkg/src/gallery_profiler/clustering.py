"""Deterministic density-based clustering of unit-norm embeddings.

Distance is Euclidean. A point is a core point when at least ``min_samples``
points (itself included) lie within ``eps``, with the boundary inclusive:
d <= eps counts as a neighbor. Points are scanned in index order and
clusters are numbered 0, 1, 2, ... in discovery order, so the labeling is a
pure function of the input order. Noise points get the label -1.

No spatial index: galleries are small (hundreds to low thousands of faces)
and the O(n^2) distance matrix keeps the behavior easy to audit.
"""

from __future__ import annotations

from collections import deque

import numpy as np

NOISE = -1


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Dense Euclidean distance matrix, exact and symmetric."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array (n, d)")
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # Guard the diagonal against sqrt rounding; self-distance is exactly 0.
    np.fill_diagonal(dist, 0.0)
    return np.minimum(dist, dist.T)


def cluster_labels(points: np.ndarray, eps: float, min_samples: int,
                   ) -> np.ndarray:
    """Label each point with its cluster id, or -1 for noise.

    Expansion is breadth-first from the first unvisited core point; border
    points (non-core within eps of a core) join the first cluster that
    reaches them. Pass the same points in the same order to get the same
    labels, bit for bit.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if min_samples < 1:
        raise ValueError("min_samples must be at least 1")
    dist = pairwise_distances(points)
    n = dist.shape[0]
    neighbor_mask = dist <= eps
    neighbor_counts = neighbor_mask.sum(axis=1)
    is_core = neighbor_counts >= min_samples

    labels = np.full(n, NOISE, dtype=int)
    visited = np.zeros(n, dtype=bool)
    next_label = 0
    for start in range(n):
        if visited[start] or not is_core[start]:
            continue
        labels[start] = next_label
        visited[start] = True
        queue = deque([start])
        while queue:
            point = queue.popleft()
            if not is_core[point]:
                continue
            for neighbor in np.flatnonzero(neighbor_mask[point]):
                if labels[neighbor] == NOISE:
                    labels[neighbor] = next_label
                if not visited[neighbor]:
                    visited[neighbor] = True
                    queue.append(neighbor)
        next_label += 1
    return labels


def cluster_members(labels: np.ndarray) -> dict[int, list[int]]:
    """Map each cluster id to its member indices, ascending; noise omitted."""
    members: dict[int, list[int]] = {}
    for idx, label in enumerate(labels):
        if label == NOISE:
            continue
        members.setdefault(int(label), []).append(idx)
    return members


def relabel_canonically(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters by first appearance so equal partitions compare
    equal regardless of the original ids. Noise stays -1."""
    mapping: dict[int, int] = {}
    out = np.full(labels.shape, NOISE, dtype=int)
    for idx, label in enumerate(labels):
        if label == NOISE:
            continue
        if label not in mapping:
            mapping[label] = len(mapping)
        out[idx] = mapping[label]
    return out
