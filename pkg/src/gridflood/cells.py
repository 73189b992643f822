"""Uniform cell lists for L1 proximity queries on the bounded lattice."""

from __future__ import annotations

import itertools

import numpy as np


def _cell_keys(points: np.ndarray, n: int, side: int, dims: int) -> np.ndarray:
    # cells are padded by one on each side so neighbour offsets never wrap
    cells = (points + n) // side + 1
    keys = np.zeros(len(points), dtype=np.int64)
    for k in range(points.shape[1]):
        keys = keys * dims + cells[:, k]
    return keys


def close_pairs(a: np.ndarray, b: np.ndarray, radius: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All index pairs ``(i, j)`` with ``||a[i] - b[j]||_1 <= radius``.

    Candidates come from the 3^d cells around each point of ``a``; cell side is
    ``max(radius, 1)`` so every true pair is among them.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    empty = np.zeros(0, dtype=np.int64)
    if len(a) == 0 or len(b) == 0:
        return empty, empty
    d = a.shape[1]
    side = max(int(radius), 1)
    dims = (2 * n) // side + 3
    key_a = _cell_keys(a, n, side, dims)
    key_b = _cell_keys(b, n, side, dims)
    order = np.argsort(key_b, kind="stable")
    sorted_b = key_b[order]

    ia_parts, jb_parts = [], []
    for off in itertools.product((-1, 0, 1), repeat=d):
        shift = 0
        for o in off:
            shift = shift * dims + o
        target = key_a + shift
        lo = np.searchsorted(sorted_b, target, side="left")
        hi = np.searchsorted(sorted_b, target, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            continue
        ia = np.repeat(np.arange(len(a)), counts)
        starts = np.repeat(lo - (np.cumsum(counts) - counts), counts)
        jb = order[starts + np.arange(total)]
        ia_parts.append(ia)
        jb_parts.append(jb)
    if not ia_parts:
        return empty, empty
    ia = np.concatenate(ia_parts)
    jb = np.concatenate(jb_parts)
    keep = np.abs(a[ia] - b[jb]).sum(axis=1) <= radius
    return ia[keep], jb[keep]


def nearest_lowest(a: np.ndarray, b: np.ndarray, radius: int, n: int, labels: np.ndarray) -> np.ndarray:
    """For each point of ``a``, the smallest ``labels[j]`` over ``b`` within ``radius``; -1 if none."""
    ia, jb = close_pairs(a, b, radius, n)
    best = np.full(len(a), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best, ia, labels[jb])
    best[best == np.iinfo(np.int64).max] = -1
    return best
