"""Good-behaviour monitors: density shells, small islands, short travel.

Every threshold is a real number built from natural logs and compared
without rounding; ball radii are floored to lattice distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gridflood.analysis.islands import islands
from gridflood.grid import GridSpec


@dataclass(frozen=True)
class GoodBehaviorParams:
    n: int
    m: int
    shell_log_power: float = 3.0
    density_log_power: float = 5.0
    island_factor: float = 3.0
    travel_window_log_power: float = 12.0
    travel_factor: float = 3.0
    travel_log_power: float = 4.0

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    @property
    def ell1(self) -> float:
        return self.n * self.m ** (-1 / 3)

    @property
    def ell2(self) -> float:
        return math.sqrt(self.n ** 3 / self.m)

    @property
    def shells(self) -> int:
        return math.floor(self.ell2 / self.ell1 / self.log_n ** self.shell_log_power)

    def shell_radius(self, i: int) -> int:
        return math.floor(i * self.ell1 / self.log_n)

    @property
    def island_gamma(self) -> int:
        return math.floor(self.ell1 / self.log_n)

    @property
    def island_cap(self) -> float:
        return self.island_factor * self.log_n

    @property
    def travel_window(self) -> int:
        return math.floor(self.ell2 ** 2 / self.log_n ** self.travel_window_log_power)

    @property
    def travel_cap(self) -> float:
        return self.travel_factor * self.ell2 / self.log_n ** self.travel_log_power


@dataclass
class GoodBehaviorReport:
    checkpoints: list[int]
    density: list[bool]
    islands: list[bool]
    travel: list[bool]
    params: GoodBehaviorParams
    anchor_policy: str
    warnings: list[str] = field(default_factory=list)

    @property
    def good(self) -> list[bool]:
        return [a and b and c for a, b, c in zip(self.density, self.islands, self.travel)]

    def at(self, t: int) -> bool:
        """G at time t: the value at the last checkpoint not after t."""
        val = True
        for c, g in zip(self.checkpoints, self.good):
            if c > t:
                break
            val = g
        return val


def lattice_anchors(spec: GridSpec, spacing: float) -> np.ndarray:
    step = max(1, math.ceil(spacing))
    axis = np.arange(-spec.n, spec.n + 1, step)
    mesh = np.meshgrid(*[axis] * spec.d, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _clipped_ball_sizes(anchors: np.ndarray, n: int, r: int) -> np.ndarray:
    lo = np.maximum(-n, anchors - r)
    hi = np.minimum(n, anchors + r)
    return np.prod(hi - lo + 1, axis=1)


def density_ok(positions: np.ndarray, anchors: np.ndarray, params: GoodBehaviorParams, chunk: int = 256) -> bool:
    """Every shell around every anchor holds at most its allowance m_i(P)."""
    if params.shells < 1:
        return True
    n, m = params.n, params.m
    scale = params.log_n ** params.density_log_power * m / (2 * n + 1) ** 3
    radii = [0] + [params.shell_radius(i) for i in range(1, params.shells + 1)]
    for start in range(0, len(anchors), chunk):
        block = anchors[start:start + chunk]
        dist = np.abs(block[:, None, :] - positions[None, :, :]).max(axis=2)
        for i in range(1, len(radii)):
            inner, outer = radii[i - 1], radii[i]
            count = ((dist > inner) & (dist <= outer)).sum(axis=1)
            shell = _clipped_ball_sizes(block, n, outer) - _clipped_ball_sizes(block, n, inner)
            if np.any(count > scale * shell):
                return False
    return True


def islands_ok(positions: np.ndarray, params: GoodBehaviorParams) -> bool:
    part = islands(positions, params.island_gamma, params.n)
    return bool(part.sizes().max() <= params.island_cap)


def travel_ok(log: list[np.ndarray], upto: int, params: GoodBehaviorParams) -> bool:
    window = params.travel_window
    cap = params.travel_cap
    for lag in range(1, min(window, upto) + 1):
        for t2 in range(lag, upto + 1):
            if np.abs(log[t2] - log[t2 - lag]).sum(axis=1).max() > cap:
                return False
    return True


def check_good_behavior(log: list[np.ndarray], n: int, checkpoints: list[int],
                        anchors: np.ndarray | None = None, params: GoodBehaviorParams | None = None,
                        ) -> GoodBehaviorReport:
    """Evaluate D, E, L at each checkpoint; each is cumulative over earlier checkpoints.

    ``anchors`` defaults to a lattice spaced ell_1 apart; current agent
    positions are always added.
    """
    m, d = log[0].shape
    params = params or GoodBehaviorParams(n, m)
    spec = GridSpec(d, n)
    base = lattice_anchors(spec, params.ell1) if anchors is None else np.asarray(anchors, dtype=np.int64)
    policy = "ell1-lattice+agents" if anchors is None else "supplied+agents"
    warnings = []
    if params.shells < 1:
        warnings.append(f"no density shells (ell2/ell1/log^{params.shell_log_power:g} n < 1); density is vacuous")
    if params.travel_window < 1:
        warnings.append("travel window shorter than one step; travel is vacuous")
    dens, isl, trav = [], [], []
    d_ok = e_ok = True
    for t in checkpoints:
        pos = log[t]
        d_ok = d_ok and density_ok(pos, np.unique(np.vstack([base, pos]), axis=0), params)
        e_ok = e_ok and islands_ok(pos, params)
        dens.append(d_ok)
        isl.append(e_ok)
        trav.append(travel_ok(log, t, params))
    return GoodBehaviorReport(list(checkpoints), dens, isl, trav, params, policy, warnings)
