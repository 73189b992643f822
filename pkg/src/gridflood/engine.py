"""Multi-agent flooding on the bounded grid, standard and island rules."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from gridflood.analysis.islands import islands
from gridflood.cells import nearest_lowest
from gridflood.grid import GridSpec, apply_moves
from gridflood.rng import PLACE, RngStream

STANDARD = "standard"
ISLAND = "island"

SEED, DIRECT, CLOSURE = "seed", "direct", "island"


@dataclass(frozen=True)
class SimConfig:
    spec: GridSpec
    m: int
    rule: str = STANDARD
    gamma: int | None = None
    meeting_distance: int = 1
    seed: int = 0
    max_steps: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if self.meeting_distance < 0:
            raise ValueError("meeting_distance must be non-negative")
        if self.rule not in (STANDARD, ISLAND):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.rule == ISLAND:
            if self.gamma is None or self.gamma < 1:
                raise ValueError("island rule needs gamma >= 1")
        elif self.gamma is not None:
            raise ValueError("gamma is only meaningful with the island rule")
        if self.max_steps is not None and self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")

    @property
    def step_cap(self) -> int:
        if self.max_steps is not None:
            return self.max_steps
        n, d = self.spec.n, self.spec.d
        return int(64 * max(n, 1) ** 2 * max(1.0, n ** d / self.m))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["spec"] = {"d": self.spec.d, "n": self.spec.n}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        data["spec"] = GridSpec(**data["spec"])
        return cls(**data)


class Event(NamedTuple):
    t: int
    infectee: int
    cause_kind: str
    cause_agent: int  # infector for direct, directly infected seed for island closure, -1 for the source
    pos: tuple[int, ...]


@dataclass
class SimState:
    t: int
    positions: np.ndarray
    infected: np.ndarray
    infection_time: np.ndarray

    @property
    def m(self) -> int:
        return len(self.positions)

    def copy(self) -> "SimState":
        return SimState(self.t, self.positions.copy(), self.infected.copy(), self.infection_time.copy())


@dataclass
class DiffusionTrace:
    config: SimConfig
    events: list[Event]
    final_time: int | None  # None means the run hit max_steps
    steps: int
    positions: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def timed_out(self) -> bool:
        return self.final_time is None

    def infection_times(self) -> dict[int, int]:
        return {e.infectee: e.t for e in self.events}

    def infected_at(self, t: int) -> set[int]:
        return {e.infectee for e in self.events if e.t <= t}


class _MeetingGrid:
    """Direct-addressed cell list (cell side 1) for small meeting radii."""

    def __init__(self, spec: GridSpec, radius: int):
        self.n = spec.n
        self.pad = radius
        self.dims = spec.side + 2 * radius
        self.strides = np.array([self.dims ** (spec.d - 1 - k) for k in range(spec.d)], dtype=np.int64)
        self.empty = np.iinfo(np.int64).max
        self.cells = np.full(self.dims ** spec.d, self.empty, dtype=np.int64)
        offs = [o for o in itertools.product(range(-radius, radius + 1), repeat=spec.d)
                if sum(abs(c) for c in o) <= radius]
        self.offsets = np.array(offs, dtype=np.int64) @ self.strides

    def _flat(self, pts: np.ndarray) -> np.ndarray:
        return (pts + self.n + self.pad) @ self.strides

    def lowest(self, sources: np.ndarray, labels: np.ndarray, queries: np.ndarray) -> np.ndarray:
        flat_src = self._flat(sources)
        np.minimum.at(self.cells, flat_src, labels)
        flat_q = self._flat(queries)
        best = self.cells[flat_q[:, None] + self.offsets[None, :]].min(axis=1)
        self.cells[flat_src] = self.empty
        best[best == self.empty] = -1
        return best


def _pos(row) -> tuple[int, ...]:
    return tuple(int(c) for c in row)


def agent_keys_default(m: int) -> np.ndarray:
    return np.arange(m, dtype=np.int64)


def init_uniform(config: SimConfig, agent_keys: np.ndarray | None = None) -> SimState:
    """i.i.d. uniform placement; only agent 0 infected."""
    keys = agent_keys_default(config.m) if agent_keys is None else np.asarray(agent_keys)
    rng = RngStream(config.seed)
    spec = config.spec
    coords = [rng.integers(keys, k, spec.side, PLACE) - spec.n for k in range(spec.d)]
    positions = np.stack(coords, axis=1).astype(np.int64)
    return state_from_positions(positions)


def state_from_positions(positions) -> SimState:
    positions = np.array(positions, dtype=np.int64)
    m = len(positions)
    infected = np.zeros(m, dtype=bool)
    infected[0] = True
    times = np.full(m, -1, dtype=np.int64)
    times[0] = 0
    return SimState(0, positions, infected, times)


class Infector:
    """Infection bookkeeping at one time step, given post-move positions."""

    def __init__(self, config: SimConfig):
        self.config = config
        r = config.meeting_distance
        small = (config.spec.side + 2 * r) ** config.spec.d <= 20_000_000
        self.grid = _MeetingGrid(config.spec, r) if r <= 2 and small else None

    def _direct(self, state: SimState) -> tuple[np.ndarray, np.ndarray]:
        prev = np.flatnonzero(state.infected)
        unin = np.flatnonzero(~state.infected)
        if len(unin) == 0 or len(prev) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        pos = state.positions
        if self.grid is not None:
            best = self.grid.lowest(pos[prev], prev, pos[unin])
        else:
            best = nearest_lowest(pos[unin], pos[prev], self.config.meeting_distance, self.config.spec.n, prev)
        hit = best >= 0
        return unin[hit], best[hit]

    def _closure(self, state: SimState, direct: np.ndarray, already: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if len(direct) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        labels = islands(state.positions, self.config.gamma, self.config.spec.n).labels
        seed_of = np.full(labels.max() + 1, -1, dtype=np.int64)
        # lowest-index direct infectee names the closure of its island
        for a in sorted(direct.tolist(), reverse=True):
            seed_of[labels[a]] = a
        seeds = seed_of[labels]
        closure = np.flatnonzero((seeds >= 0) & ~already)
        return closure, seeds[closure]

    def apply(self, state: SimState, t: int) -> list[Event]:
        """Mark infections at time ``t`` (positions already moved); returns the new events."""
        newly, infectors = self._direct(state)
        already = state.infected.copy()
        already[newly] = True
        events = [Event(t, int(a), DIRECT, int(b), _pos(state.positions[a])) for a, b in zip(newly, infectors)]
        if self.config.rule == ISLAND:
            closed, seeds = self._closure(state, newly, already)
            already[closed] = True
            events += [Event(t, int(a), CLOSURE, int(s), _pos(state.positions[a])) for a, s in zip(closed, seeds)]
        fresh = already & ~state.infected
        state.infection_time[fresh] = t
        state.infected = already
        return events

    def initial(self, state: SimState) -> list[Event]:
        events = [Event(0, 0, SEED, -1, _pos(state.positions[0]))]
        if self.config.rule == ISLAND:
            labels = islands(state.positions, self.config.gamma, self.config.spec.n).labels
            members = np.flatnonzero((labels == labels[0]) & ~state.infected)
            state.infected[members] = True
            state.infection_time[members] = 0
            events += [Event(0, int(a), CLOSURE, 0, _pos(state.positions[a])) for a in members]
        return events


def _advance(state: SimState, config: SimConfig, rng: RngStream, keys: np.ndarray) -> None:
    t = state.t + 1
    directions = rng.directions(keys, t, config.spec.d)
    state.positions = apply_moves(config.spec, state.positions, directions)
    state.t = t


def step_standard(state: SimState, config: SimConfig, rng: RngStream,
                  agent_keys: np.ndarray | None = None, infector: Infector | None = None):
    if config.rule != STANDARD:
        raise ValueError("step_standard needs the standard rule")
    return _step(state, config, rng, agent_keys, infector)


def step_island(state: SimState, config: SimConfig, rng: RngStream,
                agent_keys: np.ndarray | None = None, infector: Infector | None = None):
    if config.rule != ISLAND:
        raise ValueError("step_island needs the island rule")
    return _step(state, config, rng, agent_keys, infector)


def _step(state, config, rng, agent_keys, infector):
    keys = agent_keys_default(state.m) if agent_keys is None else agent_keys
    infector = infector or Infector(config)
    state = state.copy()
    _advance(state, config, rng, keys)
    return state, infector.apply(state, state.t)


def _start(config: SimConfig, agent_keys, initial_positions) -> tuple[SimState, np.ndarray]:
    keys = agent_keys_default(config.m) if agent_keys is None else np.asarray(agent_keys, dtype=np.int64)
    if initial_positions is None:
        return init_uniform(config, keys), keys
    state = state_from_positions(initial_positions)
    if len(state.positions) != config.m or not config.spec.contains(state.positions):
        raise ValueError("initial positions do not match the config")
    return state, keys


def iterate(config: SimConfig, agent_keys: np.ndarray | None = None,
            initial_positions: np.ndarray | None = None) -> Iterator[tuple[SimState, list[Event]]]:
    """Yield the live state and its new events at t = 0, 1, ... until everyone is infected or the cap.

    The yielded state is mutated in place by the next step; copy it to keep it.
    """
    state, keys = _start(config, agent_keys, initial_positions)
    rng = RngStream(config.seed)
    infector = Infector(config)
    events = infector.initial(state)
    yield state, events
    remaining = config.m - int(state.infected.sum())
    cap = config.step_cap
    while remaining > 0 and state.t < cap:
        _advance(state, config, rng, keys)
        new = infector.apply(state, state.t)
        remaining -= len(new)
        yield state, new


def run(config: SimConfig, record_positions: bool = False, agent_keys: np.ndarray | None = None,
        initial_positions: np.ndarray | None = None) -> DiffusionTrace:
    events: list[Event] = []
    log = [] if record_positions else None
    final = None
    t = 0
    for state, new in iterate(config, agent_keys, initial_positions):
        events.extend(new)
        t = state.t
        if record_positions:
            log.append(state.positions.copy())
        if len(events) == config.m:
            final = t
    return DiffusionTrace(config, events, final, t, log)


def replay(config: SimConfig, script: Iterable[tuple[int, np.ndarray]]) -> DiffusionTrace:
    """Apply the infection rule to scripted snapshots ``(t, positions)``; the first must be t=0.

    Between snapshots nothing happens, so "previously infected" means infected
    at the preceding snapshot.
    """
    script = list(script)
    if not script or script[0][0] != 0:
        raise ValueError("script must start at t=0")
    state = state_from_positions(script[0][1])
    infector = Infector(config)
    events = infector.initial(state)
    final = 0 if state.infected.all() else None
    for t, positions in script[1:]:
        if t <= state.t:
            raise ValueError("script times must increase")
        state.t = t
        state.positions = np.array(positions, dtype=np.int64)
        events.extend(infector.apply(state, t))
        if final is None and state.infected.all():
            final = t
    return DiffusionTrace(config, events, final, state.t)
