"""Property suites behind ``gridflood verify``: each returns a list of Check rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gridflood.analysis.isoperimetry import exhaustive_isoperimetry, greedy_matching, random_subset, surfaces
from gridflood.engine import ISLAND, STANDARD, SimConfig, run
from gridflood.grid import GridSpec
from gridflood.reference import run_naive
from gridflood.rng import derive_seed
from gridflood.rw_prob import coupling_check

BUDGETS = ("small", "full")
COUPLING_POINTS = [(8, (2, 0, 0)), (18, (2, 2, 2)), (32, (4, 0, 0))]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    ok: bool
    detail: str

    def row(self) -> list[str]:
        return [self.suite, self.name, "PASS" if self.ok else "FAIL", self.detail]


def isoperimetry_suite(budget: str = "small", seed: int | None = None) -> list[Check]:
    out = []
    for b, d, cap in [(2, 3, None), (4, 2, None)]:
        res = exhaustive_isoperimetry(b, d, cap)
        out.append(Check("isoperimetry", f"b={b} d={d} exhaustive", not res["violations"],
                         f"checked={res['checked']} cap={res['cap']} violations={len(res['violations'])}"))
    return out


def matching_suite(budget: str = "small", seed: int = 0, b: int = 5, d: int = 3) -> list[Check]:
    count = 500 if budget == "small" else 10_000
    rng = np.random.default_rng(seed)
    worst = np.inf
    bad = 0
    for _ in range(count):
        surf = surfaces(random_subset(rng, b, d), b, d)
        if not surf.exterior:
            continue
        ratio = len(greedy_matching(surf, d)) / len(surf.exterior)
        worst = min(worst, ratio)
        bad += ratio < 1 / 11
    return [Check("matching", f"{count} random subsets of {{1..{b}}}^{d}", bad == 0,
                  f"violations={bad} min_ratio={worst:.4f} bound={1 / 11:.4f}")]


def coupling_suite(budget: str = "small", seed: int = 0, zmax: float = 3.0) -> list[Check]:
    trials = 10_000 if budget == "small" else 100_000
    out, zs = [], []
    for i, (t, x) in enumerate(COUPLING_POINTS):
        res = coupling_check(3, t, x, trials, np.random.default_rng(derive_seed(seed, i)))
        zs.append(res.z)
        out.append(Check("coupling", f"t={t} x={x}", abs(res.z) <= zmax,
                         f"Q={res.collide.estimate:.5f} q2t={res.visit.estimate:.5f} z={res.z:+.3f} N={trials}"))
    out.append(Check("coupling", "max |z|", all(c.ok for c in out), f"max_abs_z={max(abs(z) for z in zs):.3f}"))
    return out


def engine_equivalence_suite(budget: str = "small", seed: int = 0, d: int = 3, n: int = 6, m: int = 48,
                             gamma: int = 2) -> list[Check]:
    seeds = 10 if budget == "small" else 100
    out = []
    for rule in (STANDARD, ISLAND):
        mismatches = []
        for k in range(seeds):
            cfg = SimConfig(GridSpec(d, n), m, rule, gamma if rule == ISLAND else None, seed=derive_seed(seed, k))
            fast, slow = run(cfg), run_naive(cfg)
            if fast.events != slow.events or fast.final_time != slow.final_time:
                mismatches.append(cfg.seed)
        out.append(Check("engine-equivalence", f"{rule} d={d} n={n} m={m}", not mismatches,
                         f"seeds={seeds} mismatches={len(mismatches)}"))
    return out


def domination_suite(budget: str = "small", seed: int = 0, d: int = 3, n: int = 6, m: int = 48,
                     gamma: int = 2) -> list[Check]:
    """Island-rule infected set contains the standard-rule set at every step.

    Both runs share the seed, so the walks coincide and only infection differs.
    """
    seeds = 10 if budget == "small" else 100
    bad = 0
    for k in range(seeds):
        s = derive_seed(seed, k)
        std = run(SimConfig(GridSpec(d, n), m, STANDARD, seed=s)).infection_times()
        isl = run(SimConfig(GridSpec(d, n), m, ISLAND, gamma, seed=s)).infection_times()
        # superset at every step <=> every standard infection time is matched no later
        bad += any(a not in isl or isl[a] > t for a, t in std.items())
    return [Check("domination", f"island gamma={gamma} vs standard d={d} n={n} m={m}", bad == 0,
                  f"seeds={seeds} violating_runs={bad}")]


SUITES = {
    "isoperimetry": isoperimetry_suite,
    "matching": matching_suite,
    "coupling": coupling_suite,
    "engine-equivalence": engine_equivalence_suite,
    "domination": domination_suite,
}
