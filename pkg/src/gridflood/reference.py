"""Deliberately naive engine: per-agent moves and all-pairs infection checks.

Shares only the random draws with :mod:`gridflood.engine`, so identical seeds
must give identical traces.
"""

from __future__ import annotations

import numpy as np

from gridflood.analysis.islands import islands_bfs
from gridflood.engine import CLOSURE, DIRECT, ISLAND, SEED, DiffusionTrace, Event, SimConfig, init_uniform
from gridflood.rng import RngStream


def _move(pos: list[int], direction: int, n: int) -> list[int]:
    axis, sign = divmod(direction, 2)
    new = list(pos)
    new[axis] += -1 if sign else 1
    if abs(new[axis]) > n:
        return list(pos)
    return new


def _l1(a, b) -> int:
    return sum(abs(x - y) for x, y in zip(a, b))


def run_naive(config: SimConfig, agent_keys=None) -> DiffusionTrace:
    m, n, d = config.m, config.spec.n, config.spec.d
    keys = np.arange(m) if agent_keys is None else np.asarray(agent_keys)
    pos = [list(map(int, p)) for p in init_uniform(config, keys).positions]
    infected = [False] * m
    infected[0] = True
    events = [Event(0, 0, SEED, -1, tuple(pos[0]))]
    if config.rule == ISLAND:
        labels = islands_bfs(pos, config.gamma).labels
        for a in range(m):
            if labels[a] == labels[0] and not infected[a]:
                infected[a] = True
                events.append(Event(0, a, CLOSURE, 0, tuple(pos[a])))
    rng = RngStream(config.seed)
    t = 0
    final = 0 if all(infected) else None
    while final is None and t < config.step_cap:
        t += 1
        dirs = rng.directions(keys, t, d)
        pos = [_move(p, int(k), n) for p, k in zip(pos, dirs)]
        prev = list(infected)
        direct = []
        for a in range(m):
            if prev[a]:
                continue
            for b in range(m):
                if prev[b] and _l1(pos[a], pos[b]) <= config.meeting_distance:
                    direct.append((a, b))
                    break
        for a, b in direct:
            infected[a] = True
            events.append(Event(t, a, DIRECT, b, tuple(pos[a])))
        if config.rule == ISLAND and direct:
            labels = islands_bfs(pos, config.gamma).labels
            for a in range(m):
                if infected[a]:
                    continue
                seeds = [s for s, _ in direct if labels[s] == labels[a]]
                if seeds:
                    infected[a] = True
                    events.append(Event(t, a, CLOSURE, min(seeds), tuple(pos[a])))
        if all(infected):
            final = t
    return DiffusionTrace(config, events, final, t, None)
