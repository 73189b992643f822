"""Exact and Monte Carlo probabilities for simple random walks.

Exact routines evolve full distributions (bounded grid or a box large enough
to hold every reachable point of the unbounded walk).  Monte Carlo routines
simulate ``N`` independent walkers at once and report a 95% binomial CI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from gridflood.grid import GridSpec, unit_moves

EXACT_STATE_CAP = 10 ** 6
EXACT_T_CAP = 64


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    trials: int

    @property
    def half_width(self) -> float:
        p = self.estimate
        return 1.96 * math.sqrt(p * (1 - p) / self.trials)

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)

    def contains(self, value: float) -> bool:
        return abs(self.estimate - value) <= self.half_width


def z_score(a: MCEstimate, b: MCEstimate | float) -> float:
    if isinstance(b, MCEstimate):
        se = math.hypot(a.stderr, b.stderr)
        diff = a.estimate - b.estimate
    else:
        se = a.stderr
        diff = a.estimate - b
    if se == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / se


# --- one dimension ------------------------------------------------------------

def passage_pmf_1d(r: int, t):
    """Probability the first passage through r > 0 happens at step t: (r/t) C(t, (t+r)/2) 2^-t."""
    t_arr = np.asarray(t, dtype=np.int64)
    if r < 1:
        raise ValueError("passage level r must be positive")
    ok = (t_arr >= r) & ((t_arr - r) % 2 == 0)
    ts = np.where(ok, t_arr, r).astype(float)
    k = (ts + r) / 2
    logp = np.log(r / ts) + gammaln(ts + 1) - gammaln(k + 1) - gammaln(ts - k + 1) - ts * math.log(2)
    out = np.where(ok, np.exp(logp), 0.0)
    return float(out) if out.ndim == 0 else out


def passage_mc_1d(r: int, t: int, trials: int, rng: np.random.Generator) -> MCEstimate:
    steps = rng.integers(0, 2, size=(trials, t), dtype=np.int8) * 2 - 1
    paths = np.cumsum(steps, axis=1, dtype=np.int32)
    reached = paths >= r
    first = np.where(reached.any(axis=1), reached.argmax(axis=1) + 1, 0)
    return MCEstimate(float(np.mean(first == t)), trials)


# --- exact evolution on the bounded grid ---------------------------------------

@dataclass(frozen=True)
class DistVector:
    spec: GridSpec
    mass: np.ndarray  # shape (2n+1,)*d

    @classmethod
    def point(cls, spec: GridSpec, pos) -> "DistVector":
        mass = np.zeros((spec.side,) * spec.d)
        mass[tuple(int(c) + spec.n for c in pos)] = 1.0
        return cls(spec, mass)

    @classmethod
    def uniform(cls, spec: GridSpec) -> "DistVector":
        return cls(spec, np.full((spec.side,) * spec.d, 1.0 / spec.volume))


def _kernel_once(p: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros_like(p)
    w = 1.0 / (2 * d)
    for axis in range(d):
        head = [slice(None)] * d
        tail = [slice(None)] * d
        # move up: mass shifts +1; the top layer's up-move is a self-loop
        head[axis], tail[axis] = slice(1, None), slice(None, -1)
        up = np.zeros_like(p)
        up[tuple(head)] = p[tuple(tail)]
        edge = [slice(None)] * d
        edge[axis] = slice(-1, None)
        up[tuple(edge)] += p[tuple(edge)]
        down = np.zeros_like(p)
        down[tuple(tail)] = p[tuple(head)]
        edge[axis] = slice(0, 1)
        down[tuple(edge)] += p[tuple(edge)]
        out += w * (up + down)
    return out


def evolve_exact(spec: GridSpec, start: DistVector, t: int, lazy: bool = False) -> DistVector:
    if spec.volume > EXACT_STATE_CAP:
        raise ValueError(f"{spec.volume} states exceeds the exact-mode cap {EXACT_STATE_CAP}")
    p = start.mass
    for _ in range(t):
        nxt = _kernel_once(p, spec.d)
        p = 0.5 * p + 0.5 * nxt if lazy else nxt
    return DistVector(spec, p)


def statistical_distance(p: DistVector, q: DistVector) -> float:
    if p.spec != q.spec or p.mass.shape != q.mass.shape:
        raise ValueError("distributions live on different supports")
    return 0.5 * float(np.abs(p.mass - q.mass).sum())


def mixing_profile(spec: GridSpec, start, eps: float, lazy: bool = False) -> int:
    """Smallest t with distance(pi_t, uniform) <= eps, by doubling then bisection.

    Distance to stationarity is nonincreasing in t, which makes bisection valid.
    """
    if spec.volume > EXACT_STATE_CAP:
        raise ValueError(f"{spec.volume} states exceeds the exact-mode cap {EXACT_STATE_CAP}")
    uni = DistVector.uniform(spec)
    p0 = DistVector.point(spec, start)

    def dist_at(t):
        return statistical_distance(evolve_exact(spec, p0, t, lazy), uni)

    if dist_at(0) <= eps:
        return 0
    lo, hi = 0, 1
    while dist_at(hi) > eps:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if dist_at(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


# --- unbounded walk: exact small-t distributions ------------------------------

@lru_cache(maxsize=32)
def _unbounded_dist(d: int, t: int) -> np.ndarray:
    """p(t, .) on the box [-t, t]^d (centre index t)."""
    if t > EXACT_T_CAP:
        raise ValueError(f"exact mode is capped at t <= {EXACT_T_CAP}")
    size = 2 * t + 1
    p = np.zeros((size,) * d)
    p[(t,) * d] = 1.0
    for _ in range(t):
        nxt = np.zeros_like(p)
        for axis in range(d):
            nxt += np.roll(p, 1, axis=axis) + np.roll(p, -1, axis=axis)
        p = nxt / (2 * d)
    p.setflags(write=False)
    return p


def p_unbounded(d: int, t: int, x) -> float:
    x = tuple(int(c) for c in x)
    if len(x) != d:
        raise ValueError("displacement has the wrong dimension")
    l1 = sum(abs(c) for c in x)
    if l1 > t or (t - l1) % 2:
        return 0.0
    return float(_unbounded_dist(d, t)[tuple(c + t for c in x)])


def p_gaussian(d: int, t: int, x) -> float:
    """Local-CLT form 2 (d / 2 pi t)^(d/2) exp(-d |x|^2 / 2t), valid on the parity class."""
    r2 = float(sum(c * c for c in x))
    return 2.0 * (d / (2 * math.pi * t)) ** (d / 2) * math.exp(-d * r2 / (2 * t))


def _absorbing_dp(kernel: list[tuple[tuple[int, ...], float]], start, target, t: int, hit_radius: int,
                  count_start: bool = True) -> float:
    """Probability that a walk with the given step kernel comes within L1 ``hit_radius`` of ``target`` by step t."""
    d = len(start)
    reach = max(max(abs(c) for c in off) for off, _ in kernel) * t
    half = max(abs(a) for a in start) + reach + 1
    size = 2 * half + 1
    grid = np.zeros((size,) * d)
    grid[tuple(c + half for c in start)] = 1.0
    coords = np.indices(grid.shape) - half
    hit_mask = np.abs(coords - np.asarray(target).reshape((d,) + (1,) * d)).sum(axis=0) <= hit_radius
    absorbed = 0.0
    if count_start:
        absorbed = float(grid[hit_mask].sum())
        grid[hit_mask] = 0.0
    for _ in range(t):
        nxt = np.zeros_like(grid)
        for off, w in kernel:
            nxt += w * np.roll(grid, off, axis=tuple(range(d)))
        absorbed += float(nxt[hit_mask].sum())
        nxt[hit_mask] = 0.0
        grid = nxt
    return absorbed


def single_step_kernel(d: int) -> list[tuple[tuple[int, ...], float]]:
    return [(tuple(int(c) for c in row), 1.0 / (2 * d)) for row in unit_moves(d)]


def difference_kernel(d: int) -> list[tuple[tuple[int, ...], float]]:
    """Step law of S1 - S2 for independent walkers."""
    law: dict[tuple[int, ...], float] = {}
    moves = unit_moves(d)
    for a in moves:
        for b in moves:
            key = tuple(int(c) for c in a - b)
            law[key] = law.get(key, 0.0) + 1.0 / (2 * d) ** 2
    return sorted(law.items())


def q_exact(d: int, t: int, x) -> float:
    """Probability an unbounded walk from the origin visits x within t steps."""
    x = tuple(int(c) for c in x)
    if not any(x):
        raise ValueError("q is defined for x != 0")
    return _absorbing_dp(single_step_kernel(d), (0,) * d, x, t, 0)


def meet_exact(d: int, t: int, x) -> float:
    """Probability two unbounded walks started x apart come within L1 distance 1 by step t."""
    return _absorbing_dp(difference_kernel(d), tuple(int(c) for c in x), (0,) * d, t, 1)


def collide_exact(d: int, t: int, x) -> float:
    """Probability two walks started x apart occupy one site at some step 1..t."""
    return _absorbing_dp(difference_kernel(d), tuple(int(c) for c in x), (0,) * d, t, 0, count_start=False)


# --- Monte Carlo --------------------------------------------------------------

def _walk_steps(rng: np.random.Generator, shape: tuple[int, ...], d: int) -> np.ndarray:
    return unit_moves(d)[rng.integers(0, 2 * d, size=shape)]


def _batched(trials: int, batch: int = 20000):
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        yield k
        done += k


def q_estimate(d: int, t: int, x, trials: int, rng: np.random.Generator) -> MCEstimate:
    """Fraction of walks from the origin that visit x at some step 1..t."""
    x = np.asarray(x, dtype=np.int64)
    if not x.any():
        raise ValueError("q is defined for x != 0")
    hits = 0
    for k in _batched(trials):
        pos = np.zeros((k, d), dtype=np.int64)
        seen = np.zeros(k, dtype=bool)
        for _ in range(t):
            pos += _walk_steps(rng, (k,), d)
            seen |= (pos == x).all(axis=1)
        hits += int(seen.sum())
    return MCEstimate(hits / trials, trials)


def Q_estimate(d: int, t: int, x, trials: int, rng: np.random.Generator) -> MCEstimate:
    """Fraction of walker pairs started x apart that collide at some step 1..t."""
    x = np.asarray(x, dtype=np.int64)
    if int(np.abs(x).sum()) % 2:
        raise ValueError("collision mode needs ||x||_1 even (parity precondition of the coupling identity)")
    hits = 0
    for k in _batched(trials):
        diff = np.tile(x, (k, 1))
        seen = np.zeros(k, dtype=bool)
        for _ in range(t):
            diff += _walk_steps(rng, (k,), d) - _walk_steps(rng, (k,), d)
            seen |= ~diff.any(axis=1)
        hits += int(seen.sum())
    return MCEstimate(hits / trials, trials)


@dataclass(frozen=True)
class CouplingCheck:
    collide: MCEstimate
    visit: MCEstimate
    z: float


def coupling_check(d: int, t: int, x, trials: int, rng: np.random.Generator) -> CouplingCheck:
    """Two-walker collision within t against single-walker visit within 2t."""
    big_q = Q_estimate(d, t, x, trials, rng)
    small_q = q_estimate(d, 2 * t, x, trials, rng) if np.any(x) else _return_estimate(d, 2 * t, trials, rng)
    return CouplingCheck(big_q, small_q, z_score(big_q, small_q))


def _return_estimate(d: int, t: int, trials: int, rng: np.random.Generator) -> MCEstimate:
    hits = 0
    for k in _batched(trials):
        pos = np.zeros((k, d), dtype=np.int64)
        seen = np.zeros(k, dtype=bool)
        for _ in range(t):
            pos += _walk_steps(rng, (k,), d)
            seen |= ~pos.any(axis=1)
        hits += int(seen.sum())
    return MCEstimate(hits / trials, trials)


def meet_estimate(d: int, t: int, x, trials: int, rng: np.random.Generator) -> MCEstimate:
    """Fraction of walker pairs started x apart that come within L1 distance 1 at some step 0..t."""
    x = np.asarray(x, dtype=np.int64)
    hits = 0
    for k in _batched(trials):
        diff = np.tile(x, (k, 1))
        seen = np.abs(diff).sum(axis=1) <= 1
        for _ in range(t):
            diff += _walk_steps(rng, (k,), d) - _walk_steps(rng, (k,), d)
            seen |= np.abs(diff).sum(axis=1) <= 1
        hits += int(seen.sum())
    return MCEstimate(hits / trials, trials)


def source_positions(j: int, x: int, d: int = 3) -> np.ndarray:
    """j starting points at L1 distance x from the origin, spread over the axis directions."""
    out = []
    for i in range(j):
        axis, sign = divmod(i, 2)
        v = np.zeros(d, dtype=np.int64)
        v[axis % d] = x if sign == 0 else -x
        # wrap-around beyond 2d sources shifts along a second axis to keep points distinct
        if i >= 2 * d:
            v[(axis + 1) % d] += i // (2 * d)
        out.append(v)
    return np.array(out)


def multi_catch_estimate(j: int, x: int, trials: int, rng: np.random.Generator, d: int = 3,
                         t: int | None = None) -> MCEstimate:
    """Probability that all j source walks meet the target walk within t = x^2 steps."""
    if j < 1:
        raise ValueError("need at least one source walk")
    t = x * x if t is None else t
    starts = source_positions(j, x, d)
    hits = 0
    for k in _batched(trials, 10000):
        target = np.zeros((k, d), dtype=np.int64)
        srcs = np.broadcast_to(starts, (k, j, d)).copy()
        met = (np.abs(srcs - target[:, None, :]).sum(axis=2) <= 1)
        for _ in range(t):
            target += _walk_steps(rng, (k,), d)
            srcs += _walk_steps(rng, (k, j), d)
            met |= np.abs(srcs - target[:, None, :]).sum(axis=2) <= 1
        hits += int(met.all(axis=1).sum())
    return MCEstimate(hits / trials, trials)


def boundary_meet_estimate(spec: GridSpec, a, b, trials: int, rng: np.random.Generator,
                           margin_factor: int = 40) -> MCEstimate:
    """Meet within ||a-b||_1^2 steps before either walker touches the grid boundary."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    dist = int(np.abs(a - b).sum())
    clearance = int((spec.n - np.abs(a)).min())
    if clearance < margin_factor * dist:
        raise ValueError(f"start is {clearance} from the boundary; needs at least {margin_factor}*||x||_1 = "
                         f"{margin_factor * dist}")
    if dist <= 1:
        return MCEstimate(1.0, trials)
    d = spec.d
    hits = 0
    for k in _batched(trials):
        p1 = np.tile(a, (k, 1))
        p2 = np.tile(b, (k, 1))
        alive = np.ones(k, dtype=bool)
        met = np.zeros(k, dtype=bool)
        for _ in range(dist * dist):
            p1 += _walk_steps(rng, (k,), d)
            p2 += _walk_steps(rng, (k,), d)
            touched = (np.abs(p1) >= spec.n).any(axis=1) | (np.abs(p2) >= spec.n).any(axis=1)
            alive &= ~touched
            met |= alive & (np.abs(p1 - p2).sum(axis=1) <= 1)
        hits += int(met.sum())
    return MCEstimate(hits / trials, trials)
