"""Surfaces of subcube sets, the greedy surface matching, and the isoperimetric bound.

Subcube sets live in {1..b}^d and are given as collections of index tuples;
two subcubes are neighbours when they share a facet (L1 distance 1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Collection, Iterable, Iterator

import numpy as np

# constants quoted for the 2-d and 3-d cases; other d fall back to the recursion
STATED_BETA = {2: 2 / 5, 3: 0.36}


@dataclass(frozen=True)
class SurfaceSets:
    exterior: frozenset
    interior: frozenset


def _neighbours(cell: tuple[int, ...], b: int) -> Iterator[tuple[int, ...]]:
    for k, c in enumerate(cell):
        for delta in (-1, 1):
            if 1 <= c + delta <= b:
                yield cell[:k] + (c + delta,) + cell[k + 1:]


def surfaces(cells: Iterable[tuple[int, ...]], b: int, d: int) -> SurfaceSets:
    """Exterior and interior surface; the complement is never built."""
    g = {tuple(c) for c in cells}
    for c in g:
        if len(c) != d or not all(1 <= x <= b for x in c):
            raise ValueError(f"cell {c} is outside {{1..{b}}}^{d}")
    exterior = {v for c in g for v in _neighbours(c, b) if v not in g}
    interior = {c for c in g if any(v not in g for v in _neighbours(c, b))}
    return SurfaceSets(frozenset(exterior), frozenset(interior))


def complement(cells: Collection[tuple[int, ...]], b: int, d: int) -> set[tuple[int, ...]]:
    g = set(cells)
    return {c for c in itertools.product(range(1, b + 1), repeat=d) if c not in g}


def greedy_matching(surf: SurfaceSets, d: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Take any remaining interior/exterior neighbour edge, drop both endpoints, repeat."""
    edges = []
    for u in sorted(surf.interior):
        for k in range(d):
            for delta in (-1, 1):
                v = u[:k] + (u[k] + delta,) + u[k + 1:]
                if v in surf.exterior:
                    edges.append((u, v))
    used_u, used_v, matching = set(), set(), []
    for u, v in edges:
        if u not in used_u and v not in used_v:
            matching.append((u, v))
            used_u.add(u)
            used_v.add(v)
    return matching


@lru_cache(maxsize=None)
def isoperimetric_constants(d: int) -> tuple[float, float]:
    """(alpha(d), beta(d)) from alpha(2)=2/3, beta(2)=2/5 and the dimension recursion."""
    if d < 2:
        raise ValueError("the isoperimetric bound needs d >= 2")
    alpha, beta = 2 / 3, 2 / 5
    for k in range(2, d):
        nxt = alpha / 2 + 1 / 4
        beta = min(alpha / nxt ** (k / (k + 1)) - nxt ** (1 / (k + 1)),
                   beta * nxt ** (1 / (k + 1)) / alpha ** (1 / k))
        alpha = nxt
    return alpha, beta


@dataclass(frozen=True)
class IsoResult:
    applies: bool
    satisfied: bool
    beta_used: float
    size: int
    surface: int


def _verdict(size: int, surface: int, b: int, d: int, beta: float | None) -> IsoResult:
    alpha, beta_rec = isoperimetric_constants(d)
    beta = STATED_BETA.get(d, beta_rec) if beta is None else beta
    applies = size <= alpha * b ** d
    ok = (not applies) or surface >= beta * size ** ((d - 1) / d)
    return IsoResult(applies, ok, beta, size, surface)


def isoperimetric_check(cells: Collection[tuple[int, ...]], b: int, d: int, beta: float | None = None) -> IsoResult:
    cells = {tuple(c) for c in cells}
    return _verdict(len(cells), len(surfaces(cells, b, d).exterior), b, d, beta)


# --- bit-mask machinery for exhaustive and random sweeps -------------------

def _cell_order(b: int, d: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, b + 1), repeat=d))


def neighbour_masks(b: int, d: int) -> list[int]:
    order = _cell_order(b, d)
    index = {c: i for i, c in enumerate(order)}
    return [sum(1 << index[v] for v in _neighbours(c, b)) for c in order]


def exterior_size(mask: int, nbr: list[int]) -> int:
    reach, bits, i = 0, mask, 0
    while bits:
        if bits & 1:
            reach |= nbr[i]
        bits >>= 1
        i += 1
    return (reach & ~mask).bit_count()


def exhaustive_isoperimetry(b: int, d: int, max_size: int | None = None, beta: float | None = None) -> dict:
    """Check every subset of {1..b}^d (up to ``max_size`` cells, default floor(alpha b^d))."""
    alpha, _ = isoperimetric_constants(d)
    cap = int(alpha * b ** d) if max_size is None else max_size
    nbr = neighbour_masks(b, d)
    checked, violations = 0, []
    for mask in range(1 << (b ** d)):
        size = mask.bit_count()
        if size > cap:
            continue
        res = _verdict(size, exterior_size(mask, nbr), b, d, beta)
        checked += 1
        if not res.satisfied:
            violations.append(mask)
    return {"checked": checked, "violations": violations, "cap": cap}


def cells_of_mask(mask: int, b: int, d: int) -> set[tuple[int, ...]]:
    return {c for i, c in enumerate(_cell_order(b, d)) if mask >> i & 1}


def random_subset(rng: np.random.Generator, b: int, d: int, p: float | None = None) -> set[tuple[int, ...]]:
    """Bernoulli subset; the density itself is drawn uniformly when ``p`` is None."""
    p = rng.random() if p is None else p
    keep = rng.random(b ** d) < p
    return {c for c, k in zip(_cell_order(b, d), keep) if k}
