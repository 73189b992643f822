import itertools
import math

import numpy as np
import pytest

from gridflood import rw_prob as rw
from gridflood.grid import GridSpec


def _first_passage_by_paths(r, t):
    hits = 0
    for steps in itertools.product((-1, 1), repeat=t):
        s = np.cumsum(steps)
        if s[-1] == r and (s[:-1] < r).all():
            hits += 1
    return hits / 2 ** t


@pytest.mark.parametrize("r,t", [(1, 1), (1, 3), (2, 2), (2, 6), (3, 9), (4, 10), (3, 4)])
def test_passage_matches_enumeration(r, t):
    assert rw.passage_pmf_1d(r, t) == pytest.approx(_first_passage_by_paths(r, t), abs=1e-12)


def test_passage_known_values_and_shape():
    assert rw.passage_pmf_1d(1, 1) == pytest.approx(0.5, abs=1e-15)
    assert rw.passage_pmf_1d(2, 2) == pytest.approx(0.25, abs=1e-15)
    assert rw.passage_pmf_1d(1, 3) == pytest.approx(0.125, abs=1e-15)
    arr = rw.passage_pmf_1d(2, np.arange(12))
    assert arr.shape == (12,) and arr[3] == 0 and arr[1] == 0
    with pytest.raises(ValueError):
        rw.passage_pmf_1d(0, 4)


def test_passage_mc_within_ci():
    est = rw.passage_mc_1d(2, 10, 200_000, np.random.default_rng(1))
    assert est.contains(rw.passage_pmf_1d(2, 10))


def test_unbounded_distribution():
    assert rw.p_unbounded(3, 2, (0, 0, 0)) == pytest.approx(1 / 6)
    assert rw.p_unbounded(3, 3, (0, 0, 0)) == 0.0
    assert rw.p_unbounded(2, 1, (1, 0)) == pytest.approx(0.25)
    total = sum(rw.p_unbounded(2, 6, x) for x in itertools.product(range(-6, 7), repeat=2))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_gaussian_close_to_exact_at_moderate_t():
    for x in [(0, 0, 0), (2, 0, 0), (2, 2, 0), (4, 2, 2)]:
        exact, approx = rw.p_unbounded(3, 64, x), rw.p_gaussian(3, 64, x)
        assert abs(approx / exact - 1) < 0.03


def test_bounded_evolution_conserves_mass_and_is_symmetric():
    spec = GridSpec(2, 3)
    p = rw.evolve_exact(spec, rw.DistVector.point(spec, (3, -3)), 25)
    assert abs(p.mass.sum() - 1) < 1e-12
    q = rw.evolve_exact(spec, rw.DistVector.point(spec, (-3, 3)), 25)
    assert np.allclose(p.mass, q.mass[::-1, ::-1])
    uni = rw.DistVector.uniform(spec)
    assert np.allclose(rw.evolve_exact(spec, uni, 5).mass, uni.mass)


def test_evolution_matches_walk_frequencies():
    spec = GridSpec(1, 2)
    p = rw.evolve_exact(spec, rw.DistVector.point(spec, (2,)), 3)
    # from the top, paths of length 3: enumerate the 8 move sequences with self-loops
    counts = np.zeros(5)
    for moves in itertools.product((1, -1), repeat=3):
        x = 2
        for mv in moves:
            x = x + mv if abs(x + mv) <= 2 else x
        counts[x + 2] += 1
    assert np.allclose(p.mass, counts / 8)


def test_mixing_profile_matches_linear_scan():
    spec = GridSpec(1, 4)
    uni = rw.DistVector.uniform(spec)
    start = rw.DistVector.point(spec, (-4,))
    t = next(t for t in range(1000)
             if rw.statistical_distance(rw.evolve_exact(spec, start, t), uni) <= 1 / 16)
    assert rw.mixing_profile(spec, (-4,), 1 / 16) == t == 38


def test_statistical_distance_bounds():
    spec = GridSpec(1, 1)
    a, b = rw.DistVector.point(spec, (-1,)), rw.DistVector.point(spec, (1,))
    assert rw.statistical_distance(a, b) == 1.0
    assert rw.statistical_distance(a, a) == 0.0
    with pytest.raises(ValueError):
        rw.statistical_distance(a, rw.DistVector.point(GridSpec(1, 2), (0,)))


@pytest.mark.parametrize("t,x", [(3, (1, 1, 0)), (5, (2, 0, 0)), (6, (2, 2, 0)), (8, (4, 0, 0))])
def test_collision_equals_visit_in_double_time(t, x):
    # the coupling identity holds exactly; the two sides use different kernels
    assert rw.collide_exact(3, t, x) == pytest.approx(rw.q_exact(3, 2 * t, x), abs=1e-13)


def test_small_exact_values():
    assert rw.collide_exact(3, 1, (0, 0, 0)) == pytest.approx(1 / 6)
    assert rw.q_exact(1, 1, (1,)) == pytest.approx(0.5)
    assert rw.meet_exact(3, 0, (1, 0, 0)) == 1.0
    assert rw.meet_exact(3, 0, (2, 0, 0)) == 0.0


def test_estimators_agree_with_exact():
    rng = np.random.default_rng(5)
    for est, exact in [
        (rw.q_estimate(3, 10, (2, 0, 0), 40_000, rng), rw.q_exact(3, 10, (2, 0, 0))),
        (rw.Q_estimate(3, 5, (2, 0, 0), 40_000, rng), rw.collide_exact(3, 5, (2, 0, 0))),
        (rw.meet_estimate(3, 6, (3, 0, 0), 40_000, rng), rw.meet_exact(3, 6, (3, 0, 0))),
    ]:
        assert abs(rw.z_score(est, exact)) < 4


def test_collision_parity_precondition():
    with pytest.raises(ValueError, match="parity"):
        rw.Q_estimate(3, 4, (1, 0, 0), 10, np.random.default_rng(0))


def test_multi_catch_single_source_is_meeting():
    est = rw.multi_catch_estimate(1, 3, 40_000, np.random.default_rng(2))
    assert abs(rw.z_score(est, rw.meet_exact(3, 9, (3, 0, 0)))) < 4
    assert len({tuple(p) for p in rw.source_positions(9, 2)}) == 9


def test_boundary_precondition_and_trivial_case():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="40"):
        rw.boundary_meet_estimate(GridSpec(3, 64), (0, 0, 0), (4, 0, 0), 10, rng)
    assert rw.boundary_meet_estimate(GridSpec(3, 64), (0, 0, 0), (1, 0, 0), 10, rng).estimate == 1.0
    est = rw.boundary_meet_estimate(GridSpec(3, 160), (0, 0, 0), (4, 0, 0), 20_000, rng)
    # far from the boundary this is the free-space meeting probability within 16 steps
    assert abs(rw.z_score(est, rw.meet_exact(3, 16, (4, 0, 0)))) < 4


def test_z_score_edges():
    a = rw.MCEstimate(0.0, 100)
    assert rw.z_score(a, 0.0) == 0.0
    assert math.isinf(rw.z_score(a, 0.5))


def test_boundary_meet_ratio_band_and_restriction():
    rng = np.random.default_rng(4)
    est = rw.boundary_meet_estimate(GridSpec(3, 160), (0, 0, 0), (4, 0, 0), 20_000, rng)
    assert 0.05 <= est.estimate * 4 <= 20
    free = rw.meet_estimate(3, 16, (4, 0, 0), 20_000, rng)
    assert est.estimate <= free.estimate + 4 * np.hypot(est.stderr, free.stderr)
