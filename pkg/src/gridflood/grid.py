"""Bounded lattice {-n..n}^d and the symmetric walk with self-loop boundaries."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be positive, got d={self.d}")
        if self.n < 0:
            raise ValueError(f"half-side must be non-negative, got n={self.n}")

    @property
    def side(self) -> int:
        return 2 * self.n + 1

    @property
    def volume(self) -> int:
        return self.side ** self.d

    def contains(self, pos) -> bool:
        pos = np.asarray(pos)
        return pos.shape[-1] == self.d and bool(np.all(np.abs(pos) <= self.n))

    def all_positions(self) -> np.ndarray:
        """Every lattice point, in C order of the (side,)*d array used by the exact evolution."""
        axes = [np.arange(-self.n, self.n + 1)] * self.d
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def unit_moves(d: int) -> np.ndarray:
    """Direction table: row 2k is +e_k, row 2k+1 is -e_k."""
    moves = np.zeros((2 * d, d), dtype=np.int64)
    for k in range(d):
        moves[2 * k, k] = 1
        moves[2 * k + 1, k] = -1
    return moves


def apply_moves(spec: GridSpec, positions: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Move each row of ``positions`` along its direction; off-grid moves become self-loops."""
    proposed = positions + unit_moves(spec.d)[directions]
    outside = np.any(np.abs(proposed) > spec.n, axis=-1)
    return np.where(outside[..., None], positions, proposed)


def step(spec: GridSpec, pos: Sequence[int], rng: np.random.Generator) -> tuple[int, ...]:
    """One step of a single walker."""
    pos = np.asarray(pos, dtype=np.int64)
    if not spec.contains(pos):
        raise ValueError(f"position {tuple(pos)} is outside the grid")
    direction = int(rng.integers(2 * spec.d))
    return tuple(int(c) for c in apply_moves(spec, pos[None, :], np.array([direction]))[0])


def l1_distance(a, b) -> int:
    return int(np.abs(np.asarray(a) - np.asarray(b)).sum())


def linf_distance(a, b) -> int:
    return int(np.abs(np.asarray(a) - np.asarray(b)).max(initial=0))


def in_interior(spec: GridSpec, pos, r: int) -> bool:
    # at least L-inf distance r from the boundary
    pos = np.asarray(pos)
    return bool(np.all((pos >= -spec.n + r) & (pos <= spec.n - r)))


def ball(spec: GridSpec, center, x: int) -> Iterator[tuple[int, ...]]:
    """In-bounds points within L-inf distance ``x`` of ``center``."""
    ranges = [range(max(-spec.n, c - x), min(spec.n, c + x) + 1) for c in center]
    return itertools.product(*ranges)


def ball_size(spec: GridSpec, center, x: int) -> int:
    size = 1
    for c in center:
        size *= min(spec.n, c + x) - max(-spec.n, c - x) + 1
    return size
