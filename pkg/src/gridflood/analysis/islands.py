"""Islands: connected components of the L1 proximity graph over agents."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from gridflood.cells import close_pairs


@dataclass(frozen=True)
class IslandPartition:
    labels: np.ndarray  # component id per agent, ids numbered by lowest member
    gamma: int

    @property
    def components(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for agent, lab in enumerate(self.labels.tolist()):
            groups.setdefault(lab, []).append(agent)
        return list(groups.values())

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=int(self.labels.max(initial=-1)) + 1)

    def members(self, agent: int) -> list[int]:
        return np.flatnonzero(self.labels == self.labels[agent]).tolist()


def _canonical(labels: np.ndarray) -> np.ndarray:
    # renumber so component ids appear in order of their lowest agent
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse].astype(np.int64)


def islands(positions: np.ndarray, gamma: int, n: int | None = None) -> IslandPartition:
    positions = np.asarray(positions, dtype=np.int64)
    m = len(positions)
    if m == 0:
        return IslandPartition(np.zeros(0, dtype=np.int64), int(gamma))
    if n is None:
        n = int(np.abs(positions).max(initial=0))
    i, j = close_pairs(positions, positions, int(gamma), n)
    keep = i < j
    graph = coo_matrix((np.ones(int(keep.sum()), dtype=np.int8), (i[keep], j[keep])), shape=(m, m))
    _, labels = connected_components(graph, directed=False)
    return IslandPartition(_canonical(labels), int(gamma))


def islands_bfs(positions, gamma: int) -> IslandPartition:
    """All-pairs BFS; the reference the cell-list version is checked against."""
    pts = [tuple(int(c) for c in p) for p in positions]
    m = len(pts)
    labels = [-1] * m
    comp = 0
    for s in range(m):
        if labels[s] != -1:
            continue
        labels[s] = comp
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in range(m):
                if labels[v] == -1 and sum(abs(x - y) for x, y in zip(pts[u], pts[v])) <= gamma:
                    labels[v] = comp
                    queue.append(v)
        comp += 1
    return IslandPartition(np.array(labels, dtype=np.int64), int(gamma))
