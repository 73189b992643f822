"""Seeded, counter-based randomness.

Every random draw the simulator makes is a pure function of
``(seed, stream, agent key, step, purpose)``.  Two consequences matter:

* a trial is reproducible from its seed alone, whatever order trials run in;
* the moves of an agent are tied to its key, not to its slot in the
  position array, so relabelling agents relabels their walks with them.

The mixer is the splitmix64 finaliser applied to a combined counter, done in
``uint64`` numpy arithmetic (wrap-around is the intended behaviour).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# purpose tags, so placement and movement never share counters
MOVE = 1
PLACE = 2


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def mix64(*words: int) -> int:
    """Hash a tuple of integers to one 64-bit value (scalar helper)."""
    with np.errstate(over="ignore"):
        h = np.uint64(0x6A09E667F3BCC908)
        for w in words:
            h = _mix(h ^ (np.uint64(int(w) & _MASK64) + _GOLDEN))
    return int(h)


def derive_seed(master_seed: int, *path: int) -> int:
    """Per-trial seed: hash(master_seed, cell, trial, ...)."""
    return mix64(master_seed, *path)


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    @property
    def key(self) -> int:
        return mix64(self.seed, self.stream)

    def hashes(self, agents: np.ndarray, t: int, purpose: int) -> np.ndarray:
        """One uint64 per agent key for step ``t``."""
        agents = np.asarray(agents, dtype=np.uint64)
        with np.errstate(over="ignore"):
            base = _mix(np.uint64(self.key) ^ (np.uint64(purpose) * _GOLDEN))
            base = _mix(base + np.uint64(t & _MASK64) * _M2)
            return _mix(base ^ (agents * _GOLDEN + _GOLDEN))

    def integers(self, agents: np.ndarray, t: int, high: int, purpose: int = MOVE) -> np.ndarray:
        """Uniform integers in ``[0, high)``, one per agent key (multiply-shift on the top 32 bits)."""
        h = self.hashes(agents, t, purpose) >> np.uint64(32)
        return ((h * np.uint64(high)) >> np.uint64(32)).astype(np.int64)

    def directions(self, agents: np.ndarray, t: int, d: int) -> np.ndarray:
        return self.integers(agents, t, 2 * d, MOVE)

    def generator(self) -> np.random.Generator:
        """A numpy Generator for Monte Carlo estimators that do not need per-agent keys."""
        return np.random.default_rng(np.random.SeedSequence(self.seed & _MASK64, spawn_key=(self.stream,)))

    def spawn(self, k: int) -> list["RngStream"]:
        return [RngStream(derive_seed(self.seed, self.stream, i), 0) for i in range(k)]
