"""gridflood command line: simulate, sweep, probe, analyze, verify."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from gridflood import rw_prob
from gridflood.analysis.goodness import check_good_behavior
from gridflood.analysis.islands import islands
from gridflood.analysis.tree import build_diffusion_tree, tree_height
from gridflood.engine import ISLAND, STANDARD, SimConfig, run
from gridflood.grid import GridSpec
from gridflood.suites import BUDGETS, SUITES
from gridflood.trace_io import read_trace, write_trace

PROBE_FIELDS = ["op", "params", "estimate", "ci_low", "ci_high", "oracle", "z"]


class CliError(Exception):
    pass


def _vector(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(rows: list[list], header: list[str], human: bool, out=None) -> None:
    out = out or sys.stdout
    if human:
        table = [header] + [[str(c) for c in r] for r in rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        for r in table:
            out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# --- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.gamma is not None and args.rule != ISLAND:
        raise CliError("--gamma only applies with --rule island")
    if args.rule == ISLAND and args.gamma is None:
        raise CliError("--rule island needs --gamma")
    try:
        cfg = SimConfig(GridSpec(args.d, args.n), args.m, args.rule, args.gamma, args.meeting_distance,
                        args.seed, args.max_steps)
    except ValueError as err:
        raise CliError(str(err)) from None
    start = time.perf_counter()
    trace = run(cfg, record_positions=args.record_positions)
    wall = (time.perf_counter() - start) * 1000
    if args.trace:
        write_trace(trace, args.trace)
    head = "T=TIMEOUT" if trace.timed_out else f"T={trace.final_time}"
    print(f"{head} steps={trace.steps} events={len(trace.events)} wall_ms={wall:.1f}")
    return 0


# --- sweep --------------------------------------------------------------------

def cmd_sweep(args) -> int:
    from gridflood.experiments import PlanError, SweepPlan, run_sweep

    try:
        plan = SweepPlan.load(args.plan)
    except FileNotFoundError:
        raise CliError(f"plan file {args.plan} not found") from None
    except PlanError as err:
        raise CliError(f"malformed plan: {err}") from None
    rows = run_sweep(plan, args.out, args.workers, timing=not args.no_timing)
    if args.figure:
        from gridflood.plotting import plot_sweep

        path = plot_sweep(rows, Path(args.out).with_suffix(".png"), x=args.figure_x)
        print(f"figure={path}", file=sys.stderr)
    print(f"rows={len(rows)} out={args.out}", file=sys.stderr)
    return 0


# --- probe --------------------------------------------------------------------

def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise CliError(f"--op {args.op} needs {' '.join(missing)}")


def _mc_row(op, params, est: rw_prob.MCEstimate, oracle=None):
    lo, hi = est.estimate - est.half_width, est.estimate + est.half_width
    z = "" if oracle is None else f"{rw_prob.z_score(est, oracle):.3f}"
    return [op, params, f"{est.estimate:.6g}", f"{lo:.6g}", f"{hi:.6g}", "" if oracle is None else f"{oracle:.12g}", z]


def _exact_row(op, params, value):
    return [op, params, f"{value:.12g}", "", "", f"{value:.12g}", ""]


def cmd_probe(args) -> int:
    op = args.op
    mc = args.trials is not None and args.trials > 0
    if mc and args.seed is None:
        raise CliError("--trials draws random walks; pass --seed")
    rng = np.random.default_rng(args.seed) if mc else None
    d = args.d
    try:
        if op == "passage":
            _need(args, "r", "t")
            exact = rw_prob.passage_pmf_1d(args.r, args.t)
            params = f"r={args.r};t={args.t}"
            row = _mc_row(op, params, rw_prob.passage_mc_1d(args.r, args.t, args.trials, rng), exact) if mc \
                else _exact_row(op, params, exact)
        elif op == "p":
            _need(args, "t", "x")
            exact = rw_prob.p_unbounded(d, args.t, args.x)
            row = _exact_row(op, f"d={d};t={args.t};x={_fmt(args.x)}", exact)
        elif op in ("q", "Q", "meet"):
            _need(args, "t", "x")
            if op == "Q" and sum(abs(c) for c in args.x) % 2:
                raise CliError("Q needs ||x||_1 even (parity precondition of the coupling identity)")
            exact_fn = {"q": rw_prob.q_exact, "Q": rw_prob.collide_exact, "meet": rw_prob.meet_exact}[op]
            mc_fn = {"q": rw_prob.q_estimate, "Q": rw_prob.Q_estimate, "meet": rw_prob.meet_estimate}[op]
            exact = exact_fn(d, args.t, args.x) if args.t <= rw_prob.EXACT_T_CAP else None
            params = f"d={d};t={args.t};x={_fmt(args.x)}"
            if mc:
                row = _mc_row(op, params, mc_fn(d, args.t, args.x, args.trials, rng), exact)
            elif exact is None:
                raise CliError(f"t={args.t} exceeds the exact cap {rw_prob.EXACT_T_CAP}; pass --trials and --seed")
            else:
                row = _exact_row(op, params, exact)
        elif op == "multi":
            _need(args, "j", "r")
            if not mc:
                raise CliError("--op multi is Monte Carlo only; pass --trials and --seed")
            est = rw_prob.multi_catch_estimate(args.j, args.r, args.trials, rng, d, args.t)
            row = _mc_row(op, f"d={d};j={args.j};x={args.r};t={args.t if args.t is not None else args.r ** 2}", est)
        elif op == "mixing":
            _need(args, "n", "eps")
            spec = GridSpec(d, args.n)
            start = args.x if args.x is not None else (-args.n,) * d
            tmix = rw_prob.mixing_profile(spec, start, args.eps, lazy=args.lazy)
            row = _exact_row(op, f"d={d};n={args.n};eps={args.eps};start={_fmt(start)};lazy={int(args.lazy)}", tmix)
        elif op == "boundary":
            _need(args, "n", "a", "b")
            if not mc:
                raise CliError("--op boundary is Monte Carlo only; pass --trials and --seed")
            est = rw_prob.boundary_meet_estimate(GridSpec(len(args.a), args.n), args.a, args.b, args.trials, rng)
            row = _mc_row(op, f"n={args.n};a={_fmt(args.a)};b={_fmt(args.b)}", est)
        else:  # argparse restricts choices
            raise CliError(f"unknown op {op}")
    except ValueError as err:
        raise CliError(str(err)) from None
    _emit([row], PROBE_FIELDS, args.human)
    return 0


def _fmt(v) -> str:
    return ",".join(str(int(c)) for c in v)


# --- analyze ------------------------------------------------------------------

def cmd_analyze(args) -> int:
    try:
        trace = read_trace(args.trace)
    except FileNotFoundError:
        raise CliError(f"trace file {args.trace} not found") from None
    except (ValueError, KeyError, json.JSONDecodeError) as err:
        raise CliError(f"cannot parse trace: {err}") from None
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        return _analyze(trace, args, out)
    except ValueError as err:
        raise CliError(str(err)) from None
    finally:
        if args.out:
            out.close()


def _analyze(trace, args, out) -> int:
    what = args.what
    if what == "tree":
        if trace.config.rule != ISLAND:
            raise CliError("--what tree needs an island-rule trace")
        window = args.window
        if window is None:
            window = max((e.t for e in trace.events), default=0)
        tree = build_diffusion_tree(trace, window)
        if args.format == "json":
            out.write(tree.to_json() + "\n")
        elif not tree.empty:
            out.write(tree.to_text() + "\n")
            out.write(f"height={tree_height(tree)}\n")
        return 0
    if what == "islands":
        if args.gamma is None:
            raise CliError("--what islands needs --gamma")
        if trace.positions is None:
            raise CliError("trace has no position records; simulate with --record-positions")
        t = args.t if args.t is not None else 0
        if not 0 <= t < len(trace.positions):
            raise CliError(f"--t {t} is outside the recorded steps 0..{len(trace.positions) - 1}")
        part = islands(trace.positions[t], args.gamma, trace.config.spec.n)
        rows = [[i, len(c), " ".join(map(str, c))] for i, c in enumerate(part.components)]
        _emit(rows, ["island", "size", "members"], args.human, out)
        return 0
    if what == "growth":
        from gridflood.experiments import growth_from_trace

        glog = growth_from_trace(trace, args.dt, args.window_length)
        out.write(glog.to_jsonl())
        if args.figure:
            from gridflood.plotting import plot_growth

            plot_growth([r.to_dict() for r in glog.records], args.figure)
        return 0
    if what == "goodness":
        if trace.positions is None:
            raise CliError("trace has no position records; simulate with --record-positions")
        last = len(trace.positions) - 1
        every = args.every or max(1, last // 10)
        checkpoints = list(range(0, last + 1, every))
        rep = check_good_behavior(trace.positions, trace.config.spec.n, checkpoints)
        for w in rep.warnings:
            print(f"warning: {w}", file=sys.stderr)
        rows = [[t, int(a), int(b), int(c), int(g)]
                for t, a, b, c, g in zip(rep.checkpoints, rep.density, rep.islands, rep.travel, rep.good)]
        _emit(rows, ["t", "density", "islands", "travel", "good"], args.human, out)
        return 0
    raise CliError(f"unknown report {what}")


# --- verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.suite != "isoperimetry" and args.seed is None:
        raise CliError(f"--suite {args.suite} is randomized; pass --seed")
    checks = SUITES[args.suite](args.budget, args.seed if args.seed is not None else 0)
    _emit([c.row() for c in checks], ["suite", "check", "result", "detail"], args.human)
    return 0 if all(c.ok for c in checks) else 1


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridflood", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one diffusion")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--rule", choices=[STANDARD, ISLAND], default=STANDARD)
    s.add_argument("--gamma", type=int)
    s.add_argument("--meeting-distance", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-steps", type=int)
    s.add_argument("--trace", help="write a JSONL trace here")
    s.add_argument("--record-positions", action="store_true", help="include per-step positions in the trace")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run a JSON sweep plan into a CSV")
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-stable output")
    s.add_argument("--figure", action="store_true", help="also save a log-log plot next to the CSV")
    s.add_argument("--figure-x", choices=["n", "m"], default="n")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("probe", help="random-walk probabilities")
    s.add_argument("--op", required=True, choices=["passage", "p", "q", "Q", "meet", "multi", "mixing", "boundary"])
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--r", type=int, help="passage level, or source distance for multi")
    s.add_argument("--t", type=int)
    s.add_argument("--x", type=_vector, help="displacement or start, e.g. 2,0,0")
    s.add_argument("--j", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--lazy", action="store_true")
    s.add_argument("--a", type=_vector)
    s.add_argument("--b", type=_vector)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--human", action="store_true")
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("analyze", help="reports on a saved trace")
    s.add_argument("--trace", required=True)
    s.add_argument("--what", required=True, choices=["tree", "islands", "growth", "goodness"])
    s.add_argument("--window", type=int, help="tree window (default: last event)")
    s.add_argument("--format", choices=["text", "json"], default="text")
    s.add_argument("--gamma", type=int)
    s.add_argument("--t", type=int)
    s.add_argument("--dt", type=int)
    s.add_argument("--window-length", type=int, help="doubling/halving window for growth")
    s.add_argument("--every", type=int, help="goodness checkpoint spacing")
    s.add_argument("--figure", help="growth: save a PNG here")
    s.add_argument("--out")
    s.add_argument("--human", action="store_true")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("verify", help="property suites")
    s.add_argument("--suite", required=True, choices=list(SUITES))
    s.add_argument("--budget", choices=BUDGETS, default="small")
    s.add_argument("--seed", type=int)
    s.add_argument("--human", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"gridflood {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
