"""Hand-built position scripts for replaying small, fully specified diffusions."""

from __future__ import annotations

import numpy as np

from gridflood.engine import ISLAND, SimConfig
from gridflood.grid import GridSpec

BRANCHING_CONFIG = SimConfig(GridSpec(3, 100), m=11, rule=ISLAND, gamma=3, meeting_distance=1, seed=0)


def _parked(m: int) -> np.ndarray:
    # everyone idles on a far row, 15 apart, unless placed explicitly
    return np.array([(-90 + 15 * k, 80, 0) for k in range(m)], dtype=np.int64)


def branching_script() -> list[tuple[int, np.ndarray]]:
    """Eleven agents (ids 0..10) with meetings only at t = 0, 20, 40, 60.

    t=0   island of 0 is {0, 1, 2, 3, 7}
    t=20  0 meets 4; island of 4 is {0, 4, 6, 9}
    t=40  3 meets 10 (island {3, 10}); 6 meets 5 (island {5, 6})
    t=60  0 meets 8 (island {0, 8})
    """
    snaps = []
    placement = {
        0: {0: (0, 0, 0), 1: (3, 0, 0), 2: (6, 0, 0), 3: (0, 3, 0), 7: (0, -3, 0)},
        20: {0: (0, 0, 0), 4: (1, 0, 0), 6: (4, 0, 0), 9: (-3, 0, 0)},
        40: {3: (30, 0, 0), 10: (31, 0, 0), 6: (60, 0, 0), 5: (60, 1, 0)},
        60: {0: (-30, 0, 0), 8: (-30, 1, 0)},
    }
    for t, placed in placement.items():
        pos = _parked(11)
        for agent, p in placed.items():
            pos[agent] = p
        snaps.append((t, pos))
    return snaps
