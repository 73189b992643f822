"""Seeded sweeps, scaling fits, the phase scan, and growth monitors."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from gridflood.analysis.isoperimetry import surfaces
from gridflood.analysis.subcubes import default_side, subcube_view
from gridflood.engine import STANDARD, SimConfig, iterate, run
from gridflood.grid import GridSpec
from gridflood.rng import derive_seed

log = logging.getLogger(__name__)

CSV_FIELDS = ["cell_id", "d", "n", "m", "rule", "gamma", "seed", "T", "timed_out", "wall_ms"]
CELL_FIELDS = {"d", "n", "m", "rule", "gamma", "meeting_distance", "max_steps"}


class PlanError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SweepPlan:
    cells: list[dict]
    trials: int
    master_seed: int
    workers: int = 1
    max_steps: int | None = None   # per-cell step cap unless a cell sets its own

    def config(self, cell_id: int, trial: int) -> SimConfig:
        cell = self.cells[cell_id]
        return SimConfig(GridSpec(cell["d"], cell["n"]), cell["m"], cell.get("rule", STANDARD),
                         cell.get("gamma"), cell.get("meeting_distance", 1),
                         derive_seed(self.master_seed, cell_id, trial), cell.get("max_steps", self.max_steps))

    @classmethod
    def from_dict(cls, data: dict) -> "SweepPlan":
        for key in ("cells", "trials", "master_seed"):
            if key not in data:
                raise PlanError(key, "missing")
        unknown = set(data) - {"cells", "trials", "master_seed", "workers", "max_steps", "format_version"}
        if unknown:
            raise PlanError(sorted(unknown)[0], "unknown field")
        if not isinstance(data["trials"], int) or data["trials"] < 1:
            raise PlanError("trials", "must be a positive integer")
        if not isinstance(data["master_seed"], int):
            raise PlanError("master_seed", "must be an integer")
        if not isinstance(data.get("workers", 1), int) or data.get("workers", 1) < 1:
            raise PlanError("workers", "must be a positive integer")
        if data.get("max_steps") is not None and (not isinstance(data["max_steps"], int) or data["max_steps"] < 0):
            raise PlanError("max_steps", "must be a non-negative integer")
        if not isinstance(data["cells"], list):
            raise PlanError("cells", "must be a list")
        cells = []
        for i, cell in enumerate(data["cells"]):
            if not isinstance(cell, dict):
                raise PlanError(f"cells[{i}]", "must be an object")
            extra = set(cell) - CELL_FIELDS
            if extra:
                raise PlanError(f"cells[{i}].{sorted(extra)[0]}", "unknown field")
            for key in ("d", "n", "m"):
                if not isinstance(cell.get(key), int):
                    raise PlanError(f"cells[{i}].{key}", "missing or not an integer")
            try:
                SimConfig(GridSpec(cell["d"], cell["n"]), cell["m"], cell.get("rule", STANDARD), cell.get("gamma"),
                          cell.get("meeting_distance", 1), 0, cell.get("max_steps"))
            except ValueError as err:
                raise PlanError(f"cells[{i}]", str(err)) from None
            cells.append(dict(cell))
        return cls(cells, data["trials"], data["master_seed"], data.get("workers", 1), data.get("max_steps"))

    @classmethod
    def load(cls, path) -> "SweepPlan":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as err:
            raise PlanError("<file>", f"not valid JSON ({err})") from None
        return cls.from_dict(data)


def _trial(plan: SweepPlan, cell_id: int, trial: int, timing: bool = True) -> dict:
    cfg = plan.config(cell_id, trial)
    start = time.perf_counter()
    trace = run(cfg)
    wall = (time.perf_counter() - start) * 1000
    return {"cell_id": cell_id, "d": cfg.spec.d, "n": cfg.spec.n, "m": cfg.m, "rule": cfg.rule,
            "gamma": "" if cfg.gamma is None else cfg.gamma, "seed": cfg.seed,
            "T": "" if trace.timed_out else trace.final_time, "timed_out": int(trace.timed_out),
            "wall_ms": round(wall, 3) if timing else 0}


def _trial_safe(plan: SweepPlan, cell_id: int, trial: int, timing: bool = True) -> dict:
    for attempt in (1, 2):
        try:
            return _trial(plan, cell_id, trial, timing)
        except Exception as err:  # noqa: BLE001  retried once, then recorded
            log.warning("cell %d trial %d failed (attempt %d): %s", cell_id, trial, attempt, err)
    cfg = plan.config(cell_id, trial)
    return {"cell_id": cell_id, "d": cfg.spec.d, "n": cfg.spec.n, "m": cfg.m, "rule": cfg.rule,
            "gamma": "" if cfg.gamma is None else cfg.gamma, "seed": cfg.seed, "T": "error",
            "timed_out": 0, "wall_ms": 0}


def read_rows(path) -> list[dict]:
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return []
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_rows(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def run_sweep(plan: SweepPlan, out=None, workers: int | None = None, timing: bool = True) -> list[dict]:
    """One row per (cell, trial), sorted by cell then trial.

    With ``out`` set, rows already in the file are kept and skipped, new rows
    are appended as they finish, and the file is rewritten in order at the end.
    ``timing=False`` writes wall_ms as 0 so repeated sweeps are byte-identical.
    """
    workers = plan.workers if workers is None else workers
    seed_order = {(c, plan.config(c, k).seed): (c, k) for c in range(len(plan.cells)) for k in range(plan.trials)}
    done: dict[tuple[int, int], dict] = {}
    if out is not None:
        for row in read_rows(out):
            key = (int(row["cell_id"]), int(row["seed"]))
            if key in seed_order:
                done[seed_order[key]] = row
        if not Path(out).exists() or Path(out).stat().st_size == 0:
            write_rows([], out)
    todo = [(c, k) for c in range(len(plan.cells)) for k in range(plan.trials) if (c, k) not in done]
    sink = None if out is None else Path(out).open("a", newline="")
    writer = None if sink is None else csv.DictWriter(sink, fieldnames=CSV_FIELDS, lineterminator="\n")

    def collect(key, row):
        done[key] = row
        if writer is not None:
            writer.writerow(row)
            sink.flush()

    try:
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(_trial_safe, plan, c, k, timing): (c, k) for c, k in todo}
                for fut, key in futures.items():
                    collect(key, fut.result())
        else:
            for c, k in todo:
                collect((c, k), _trial_safe(plan, c, k, timing))
    finally:
        if sink is not None:
            sink.close()
    rows = [done[key] for key in sorted(done)]
    if out is not None:
        write_rows(rows, out)
    return rows


# --- summaries and fits --------------------------------------------------------

@dataclass
class CellStats:
    key: tuple
    values: np.ndarray
    timeouts: int
    errors: int

    @property
    def total(self) -> int:
        return len(self.values) + self.timeouts + self.errors

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def stderr(self) -> float:
        return float(self.values.std(ddof=1) / math.sqrt(len(self.values))) if len(self.values) > 1 else 0.0

    @property
    def median(self) -> float:
        return float(np.median(self.values))

    @property
    def trimmed_mean(self) -> float:
        return float(stats.trim_mean(self.values, 0.1))

    @property
    def geomean(self) -> float:
        return float(np.exp(np.log(np.maximum(self.values, 1)).mean()))


def cell_stats(rows: list[dict], keys=("d", "n", "m")) -> list[CellStats]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(int(row[k]) for k in keys), []).append(row)
    out = []
    for key in sorted(groups):
        vals, timeouts, errors = [], 0, 0
        for row in groups[key]:
            if str(row["T"]) == "error":
                errors += 1
            elif int(row["timed_out"]):
                timeouts += 1
            else:
                vals.append(float(row["T"]))
        out.append(CellStats(key, np.array(vals), timeouts, errors))
    return out


@dataclass
class ScalingFit:
    terms: list[str]
    coef: dict[str, float]
    stderr: dict[str, float]
    residuals: np.ndarray
    r2: float
    unreliable: bool = False
    excluded: list[tuple] = field(default_factory=list)

    @property
    def slope(self) -> float:
        return self.coef[self.terms[0]]


def fit_power_law(columns: dict[str, np.ndarray], y: np.ndarray) -> ScalingFit:
    """OLS of y on [1, columns...] with classical standard errors."""
    names = list(columns)
    X = np.column_stack([np.ones(len(y))] + [columns[k] for k in names])
    if np.linalg.matrix_rank(X) < X.shape[1] or len(y) < X.shape[1]:
        raise ValueError("degenerate design matrix: regressors are collinear or too few cells")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = len(y) - X.shape[1]
    sigma2 = float(resid @ resid / dof) if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(X.T @ X)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    coef = {"log_C": float(beta[0])} | {k: float(b) for k, b in zip(names, beta[1:])}
    se = {"log_C": float(math.sqrt(cov[0, 0]))} | {k: float(math.sqrt(cov[i + 1, i + 1])) for i, k in enumerate(names)}
    return ScalingFit(names, coef, se, resid, r2)


def fit_scaling(rows: list[dict], model: str = "n", stat: str = "mean", min_trials: int = 20,
                min_levels: int = 3) -> ScalingFit:
    """Fit log T = log C + a log n (+ b log m) on per-cell statistics.

    ``stat`` is ``mean`` (log of mean T) or ``geomean`` (mean of log T).
    Cells whose trials all time out are dropped; a fit where more than 10% of
    trials time out is flagged unreliable.
    """
    cells = cell_stats(rows)
    usable, excluded = [], []
    timeouts = total = 0
    for c in cells:
        timeouts += c.timeouts
        total += c.total
        if c.total < min_trials:
            raise ValueError(f"cell {c.key} has {c.total} trials; need at least {min_trials}")
        (usable if len(c.values) else excluded).append(c)
    ns = np.array([c.key[1] for c in usable], dtype=float)
    ms = np.array([c.key[2] for c in usable], dtype=float)
    if len(set(ns.tolist())) < min_levels:
        raise ValueError(f"need at least {min_levels} distinct n values")
    y = np.log([c.mean if stat == "mean" else c.geomean for c in usable])
    if model == "n":
        cols = {"a": np.log(ns)}
    elif model == "nm":
        cols = {"a": np.log(ns), "b": np.log(ms)}
    elif model == "m":
        cols = {"b": np.log(ms)}
    else:
        raise ValueError(f"unknown model {model!r}")
    fit = fit_power_law(cols, y)
    fit.unreliable = total > 0 and timeouts / total > 0.10
    fit.excluded = [c.key for c in excluded]
    return fit


def scaling_rows(d: int, ns, m_of_n, trials: int, master_seed: int, workers: int = 1) -> list[dict]:
    cells = [{"d": d, "n": int(n), "m": int(m_of_n(n))} for n in ns]
    return run_sweep(SweepPlan(cells, trials, master_seed, workers))


# --- phase scan --------------------------------------------------------------

@dataclass
class PhaseScan:
    n: int
    ms: list[int]
    cells: list[CellStats]
    slopes: list[float]      # local log-log slope between consecutive m
    crossover: int | None    # m at the strongest second difference
    ordering_ok: bool        # no cell mean significantly above its predecessor

    def table(self) -> list[dict]:
        out = []
        for i, c in enumerate(self.cells):
            out.append({"m": self.ms[i], "mean_T": c.mean, "se": c.stderr, "median_T": c.median,
                        "trimmed_T": c.trimmed_mean, "timeouts": c.timeouts,
                        "slope_to_next": self.slopes[i] if i < len(self.slopes) else ""})
        return out


def phase_scan(n: int, ms, trials: int, master_seed: int, d: int = 3, workers: int = 1) -> PhaseScan:
    ms = sorted(int(m) for m in ms)
    if ms[0] < 2:
        raise ValueError("phase scan needs m >= 2 (one agent finishes at T=0, which has no log)")
    cells = [{"d": d, "n": n, "m": m} for m in ms]
    rows = run_sweep(SweepPlan(cells, trials, master_seed, workers))
    summary = cell_stats(rows)
    by_m = {c.key[2]: c for c in summary}
    cs = [by_m[m] for m in ms]
    logm = np.log(ms)
    logt = np.log([c.mean for c in cs])
    slopes = list(np.diff(logt) / np.diff(logm))
    crossover = None
    if len(slopes) >= 2:
        second = np.abs(np.diff(slopes))
        crossover = ms[int(np.argmax(second)) + 1]
    ordering = all(
        b.mean - a.mean <= 1.96 * math.hypot(a.stderr, b.stderr) for a, b in zip(cs, cs[1:])
    )
    return PhaseScan(n, ms, cs, [float(s) for s in slopes], crossover, ordering)


# --- growth monitors ---------------------------------------------------------

@dataclass
class GrowthRecord:
    t: int
    infected: int
    uninfected: int
    good: int
    surface: int
    config_type: int
    delta: int | None = None
    e: tuple[bool, bool, bool, bool] | None = None
    chi1: bool | None = None
    chi2: bool | None = None

    def to_dict(self) -> dict:
        return {"t": self.t, "infected": self.infected, "uninfected": self.uninfected, "good": self.good,
                "surface": self.surface, "config_type": self.config_type, "delta": self.delta,
                "e": None if self.e is None else list(self.e), "chi1": self.chi1, "chi2": self.chi2}


@dataclass
class GrowthLog:
    records: list[GrowthRecord]
    dt: int
    window: int
    side: int
    final_time: int | None

    def to_jsonl(self) -> str:
        head = {"kind": "growth_header", "format_version": 1, "dt": self.dt, "window": self.window,
                "side": self.side, "final_time": self.final_time}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps({"kind": "growth"} | r.to_dict(), sort_keys=True) for r in self.records]
        return "\n".join(lines) + "\n"


def _e_flags(delta: int, f: int, u: int, side: int, n: int, tau0: float) -> tuple[bool, bool, bool, bool]:
    L = math.log(n)
    e1 = delta >= 0.09 * tau0 * (f / (4 * side * L ** 2)) ** (2 / 3) * side / L ** 13
    e2 = delta >= tau0 ** 2 / (8 * L ** 38) * f
    e3 = delta >= 0.015 * tau0 * (u / (4 * side * L ** 2)) ** (2 / 3) * side / L ** 13
    e4 = delta >= tau0 ** 2 / (8 * L ** 38) * u
    return e1, e2, e3, e4


def _growth_defaults(n: int, m: int, dt, window, side):
    side = default_side(n, m) if side is None else side
    dt = 16 * side * side if dt is None else dt
    window = math.ceil(8 * math.sqrt(m / n) * dt) if window is None else window
    return dt, window, side


def _growth_log(frames, m: int, n: int, dt: int, window: int, side: int, tau0: float) -> GrowthLog:
    """Shared bookkeeping over (t, positions, infected mask) frames at consecutive t."""
    counts, records, final = [], [], None
    for t, positions, infected in frames:
        f = int(infected.sum())
        counts.append(f)
        if t % dt == 0 or (f == m and final is None):
            view = subcube_view(positions, infected, n, side)
            surf = surfaces(view.good_cells, view.b, 3)
            records.append(GrowthRecord(t, f, m - f, int(view.good.sum()), len(surf.exterior), view.config_type))
        if f == m and final is None:
            final = t
    last = len(counts) - 1
    for rec in records:
        end = rec.t + dt
        if end <= last or final is not None:
            rec.delta = counts[min(end, last)] - rec.infected
            rec.e = _e_flags(rec.delta, rec.infected, rec.uninfected, side, n, tau0)
        wend = rec.t + window
        if wend <= last or final is not None:
            f_end = counts[min(wend, last)]
            rec.chi1 = f_end >= 2 * rec.infected
            rec.chi2 = (m - f_end) <= 0.5 * rec.uninfected
    return GrowthLog(records, dt, window, side, final)


def growth_monitor(config: SimConfig, dt: int | None = None, window: int | None = None,
                   side: int | None = None, tau0: float = 1.0) -> GrowthLog:
    """Record infected/uninfected counts and subcube structure every ``dt`` steps.

    Defaults: subcube side round(sqrt(n^3/m) ln n), dt = 16 side^2,
    window = 8 sqrt(m/n) dt.  Each record's window flags compare counts at
    t and t + window, using the final counts if the run ends inside the window.
    """
    if config.spec.d != 3:
        raise ValueError("growth monitoring is defined on the 3-d grid")
    n, m = config.spec.n, config.m
    dt, window, side = _growth_defaults(n, m, dt, window, side)
    frames = ((st.t, st.positions, st.infected) for st, _ in iterate(config))
    return _growth_log(frames, m, n, dt, window, side, tau0)


def growth_from_trace(trace, dt: int | None = None, window: int | None = None,
                      side: int | None = None, tau0: float = 1.0) -> GrowthLog:
    """Same log as :func:`growth_monitor`, rebuilt from a trace with recorded positions."""
    cfg = trace.config
    if cfg.spec.d != 3:
        raise ValueError("growth monitoring is defined on the 3-d grid")
    if trace.positions is None:
        raise ValueError("trace has no position records; simulate with --record-positions")
    n, m = cfg.spec.n, cfg.m
    dt, window, side = _growth_defaults(n, m, dt, window, side)
    times = np.full(m, np.iinfo(np.int64).max)
    for e in trace.events:
        times[e.infectee] = e.t
    frames = ((t, pos, times <= t) for t, pos in enumerate(trace.positions))
    return _growth_log(frames, m, n, dt, window, side, tau0)


@dataclass
class SparseLog:
    round_length: int
    new_per_round: list[int]
    achieved: list[bool]
    final_time: int | None

    @property
    def cumulative(self) -> list[int]:
        return list(np.cumsum(self.new_per_round))

    @property
    def rounds(self) -> int:
        return len(self.new_per_round)

    @property
    def fraction_achieved(self) -> float:
        return float(np.mean(self.achieved)) if self.achieved else 1.0


def sparse_monitor(config: SimConfig, c: float = 1.0, slack: float = 1.0) -> SparseLog:
    """Per-round infection counts with rounds of c n^3 ln n / m steps.

    A round "achieves" when it infects at least min(m1, m2/2) / slack agents,
    m1 and m2 being the infected and uninfected counts at its start.
    """
    n, m = config.spec.n, config.m
    length = max(1, math.ceil(c * n ** config.spec.d * math.log(max(n, 2)) / m))
    new, achieved = [], []
    start_f = None
    final = None
    for state, _ in iterate(config):
        f = int(state.infected.sum())
        if state.t == 0:
            start_f = f
            if f == m:
                final = 0
            continue
        if state.t % length == 0 or f == m:
            gained = f - start_f
            new.append(gained)
            achieved.append(gained >= min(start_f, (m - start_f) / 2) / slack)
            start_f = f
        if f == m:
            final = state.t
    return SparseLog(length, new, achieved, final)
