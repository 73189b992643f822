"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed at the end of the run.

Run alone with ``pytest tests/test_acceptance.py -v`` (about 5 minutes on one core),
or as a script: ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from gridflood.analysis.isoperimetry import exhaustive_isoperimetry
from gridflood.analysis.tree import build_diffusion_tree, tree_height
from gridflood.engine import replay
from gridflood.experiments import SweepPlan, fit_scaling, phase_scan, run_sweep
from gridflood.grid import GridSpec
from gridflood.rw_prob import DistVector, evolve_exact, mixing_profile, passage_mc_1d, passage_pmf_1d
from gridflood.scenarios import BRANCHING_CONFIG, branching_script
from gridflood.suites import coupling_suite, domination_suite, engine_equivalence_suite, matching_suite

try:
    from conftest import ACCEPTANCE, DATA
except ImportError:  # running as a script from elsewhere
    from tests.conftest import ACCEPTANCE, DATA

MASTER_SEED = 2024


def record(num: int, ok: bool, text: str) -> None:
    ACCEPTANCE.append((num, ok, text))
    print(f"{'PASS' if ok else 'FAIL'}  [{num:2d}] {text}")
    assert ok, text


def _slope(cells, trials=50):
    rows = run_sweep(SweepPlan(cells, trials, MASTER_SEED))
    return fit_scaling(rows, "n", stat="mean")


def test_01_coupling_identity():
    start = time.perf_counter()
    checks = coupling_suite("full", MASTER_SEED)
    secs = time.perf_counter() - start
    per_point = "; ".join(c.detail.split(" N=")[0].split(" ")[-1] for c in checks[:-1])
    record(1, all(c.ok for c in checks) and secs < 60,
           f"collision within t vs visit within 2t, N=1e5: {per_point} (|z|<=3), {secs:.0f}s")


def _enumerated_passage(r, t):
    steps = 1 - 2 * ((np.arange(2 ** t)[:, None] >> np.arange(t)) & 1)
    paths = np.cumsum(steps, axis=1)
    first = paths[:, -1] == r
    if t > 1:
        first &= (paths[:, :-1] < r).all(axis=1)
    return first.mean()


def test_02_first_passage():
    start = time.perf_counter()
    worst = max(abs(passage_pmf_1d(r, t) - _enumerated_passage(r, t))
                for r in range(1, 5) for t in range(1, 15))
    est = passage_mc_1d(2, 10, 10 ** 6, np.random.default_rng(MASTER_SEED))
    exact = passage_pmf_1d(2, 10)
    secs = time.perf_counter() - start
    record(2, worst <= 1e-12 and est.contains(exact) and secs < 60,
           f"first passage closed form vs enumeration r<=4 t<=14: max err {worst:.1e}; "
           f"MC(2,10)={est.estimate:.5f}+-{est.half_width:.5f} vs {exact:.5f}, {secs:.0f}s")


def test_03_isoperimetry():
    start = time.perf_counter()
    cube = exhaustive_isoperimetry(2, 3, max_size=4)
    square = exhaustive_isoperimetry(4, 2)
    secs = time.perf_counter() - start
    ok = not cube["violations"] and not square["violations"] and square["cap"] == 10 and secs < 60
    record(3, ok, f"isoperimetric bound exhaustive: {{1..2}}^3 |G|<=4 {cube['checked']} sets, "
                  f"{{1..4}}^2 |G|<=10 {square['checked']} sets, "
                  f"violations {len(cube['violations']) + len(square['violations'])}, {secs:.1f}s")


def test_04_matching_bound():
    start = time.perf_counter()
    (check,) = matching_suite("full", MASTER_SEED)
    secs = time.perf_counter() - start
    record(4, check.ok and secs < 60, f"greedy matching >= |exterior|/11 on 1e4 subsets of {{1..5}}^3: "
                                      f"{check.detail}, {secs:.0f}s")


def test_05_engine_equivalence():
    start = time.perf_counter()
    checks = engine_equivalence_suite("full", MASTER_SEED)
    secs = time.perf_counter() - start
    record(5, all(c.ok for c in checks) and secs < 120,
           "cell-list engine == naive engine, d=3 n=6 m=48, 100 seeds per rule: "
           + "; ".join(f"{c.name.split()[0]} {c.detail}" for c in checks) + f", {secs:.0f}s")


@pytest.mark.slow
def test_06_dense_scaling():
    start = time.perf_counter()
    fit = _slope([{"d": 3, "n": n, "m": n ** 3 // 8} for n in (8, 12, 16, 24)])
    secs = time.perf_counter() - start
    record(6, 0.65 <= fit.slope <= 1.35 and not fit.unreliable,
           f"d=3 dense (m=n^3/8) slope {fit.slope:.3f}+-{fit.stderr['a']:.3f} in [0.65,1.35], "
           f"R2={fit.r2:.3f}, {secs:.0f}s")


@pytest.mark.slow
def test_07_sparse_scaling():
    start = time.perf_counter()
    fit = _slope([{"d": 3, "n": n, "m": 4} for n in (6, 8, 10, 12)])
    secs = time.perf_counter() - start
    record(7, 2.5 <= fit.slope <= 3.5 and not fit.unreliable,
           f"d=3 sparse (m=4) slope {fit.slope:.3f}+-{fit.stderr['a']:.3f} in [2.5,3.5], {secs:.0f}s")


@pytest.mark.slow
def test_08_low_dimension_laws():
    start = time.perf_counter()
    one = _slope([{"d": 1, "n": n, "m": n // 2} for n in (16, 32, 64)])
    two = _slope([{"d": 2, "n": n, "m": n} for n in (8, 16, 32)])
    secs = time.perf_counter() - start
    ok = 0.6 <= one.slope <= 1.4 and 1.1 <= two.slope <= 1.9 and not (one.unreliable or two.unreliable)
    record(8, ok, f"d=1 (m=n/2) slope {one.slope:.3f} in [0.6,1.4]; d=2 (m=n) slope {two.slope:.3f} "
                  f"in [1.1,1.9], {secs:.0f}s")


@pytest.mark.slow
def test_09_phase_scan():
    start = time.perf_counter()
    # the grid runs past (2n+1)^3 = 35937 sites, where the plateau sets in on this lattice
    scan = phase_scan(16, [2 ** k for k in range(1, 17)], trials=30, master_seed=MASTER_SEED)
    secs = time.perf_counter() - start
    top = scan.slopes[-1]
    record(9, scan.ordering_ok and abs(top) < 0.3,
           f"n=16 m=2..65536: means nonincreasing at 95% = {scan.ordering_ok}, top local slope {top:.3f} "
           f"(|.|<0.3), crossover m*={scan.crossover}, {secs:.0f}s")


def test_10_island_domination():
    start = time.perf_counter()
    (check,) = domination_suite("full", MASTER_SEED)
    secs = time.perf_counter() - start
    record(10, check.ok, f"island-rule infected set contains standard-rule set at every step: "
                         f"{check.detail}, {secs:.0f}s")


def test_11_branching_tree():
    start = time.perf_counter()
    tree = build_diffusion_tree(replay(BRANCHING_CONFIG, branching_script()), 60)
    golden = (DATA / "branching_tree.txt").read_text().splitlines()[0]
    secs = time.perf_counter() - start
    ok = tree.to_text() == golden and tree_height(tree) == 4 and secs < 1
    record(11, ok, f"scripted branching scenario tree {tree.to_text()} height {tree_height(tree)}, {secs:.2f}s")


def test_12_mixing_profile():
    start = time.perf_counter()
    ratios, drift = [], 0.0
    for n in (4, 8, 16):
        spec = GridSpec(1, n)
        t = mixing_profile(spec, (-n,), 1 / 16)
        ratios.append(t / n ** 2)
        p = evolve_exact(spec, DistVector.point(spec, (-n,)), 4 * t)
        drift = max(drift, abs(p.mass.sum() - 1))
    secs = time.perf_counter() - start
    band = max(ratios) / min(ratios)
    record(12, band <= 8 and drift <= 1e-12 and secs < 60,
           f"d=1 eps=1/16 mixing t/n^2 = {', '.join(f'{r:.3f}' for r in ratios)} (spread x{band:.2f} <= 8), "
           f"mass drift {drift:.1e}, {secs:.1f}s")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
