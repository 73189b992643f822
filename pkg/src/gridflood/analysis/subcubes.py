"""Subcube partition of the 3-d grid with good/bad labels and agent-type counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def default_side(n: int, m: int) -> int:
    """sqrt(n^3/m) * ln n, rounded to a positive integer."""
    return max(1, round(math.sqrt(n ** 3 / m) * math.log(max(n, 2))))


@dataclass(frozen=True)
class SubcubeView:
    side: int
    b: int
    total: np.ndarray      # agents per subcube, shape (b, b, b)
    infected: np.ndarray   # infected agents per subcube
    n: int

    @property
    def good(self) -> np.ndarray:
        return self.infected > self.side / 2

    @property
    def good_cells(self) -> set[tuple[int, ...]]:
        """Good subcubes as 1-based index tuples."""
        return {tuple(int(c) + 1 for c in idx) for idx in np.argwhere(self.good)}

    @property
    def counts(self) -> dict[str, int]:
        g = self.good
        unin = self.total - self.infected
        return {
            "f_good": int(self.infected[g].sum()),
            "u_good": int(unin[g].sum()),
            "f_bad": int(self.infected[~g].sum()),
            "u_bad": int(unin[~g].sum()),
        }

    @property
    def config_type(self) -> int:
        half_cubes = 0.5 * ((2 * self.n + 1) / self.side) ** 3
        c = self.counts
        f_all = c["f_good"] + c["f_bad"]
        u_all = c["u_good"] + c["u_bad"]
        if int(self.good.sum()) <= half_cubes:
            return 1 if c["f_good"] >= 0.5 * f_all else 2
        return 3 if c["u_good"] < 0.5 * u_all else 4

    def density_ok(self) -> bool:
        """Every subcube holds between side and 2 side ln^2 n agents."""
        hi = 2 * self.side * math.log(self.n) ** 2
        return bool(np.all((self.total >= self.side) & (self.total <= hi)))


def subcube_view(positions: np.ndarray, infected: np.ndarray, n: int, side: int | None = None) -> SubcubeView:
    positions = np.asarray(positions, dtype=np.int64)
    if positions.shape[1] != 3:
        raise ValueError("subcube views are defined on the 3-d grid")
    side = default_side(n, len(positions)) if side is None else int(side)
    if side < 1 or side > 2 * n + 1:
        raise ValueError(f"subcube side {side} exceeds the grid side {2 * n + 1}; use the sparse monitor")
    b = math.ceil((2 * n + 1) / side)
    cells = (positions + n) // side
    flat = np.ravel_multi_index(cells.T, (b, b, b))
    total = np.bincount(flat, minlength=b ** 3).reshape(b, b, b)
    inf = np.bincount(flat, weights=np.asarray(infected, dtype=np.int64), minlength=b ** 3)
    return SubcubeView(side, b, total, inf.astype(np.int64).reshape(b, b, b), n)
