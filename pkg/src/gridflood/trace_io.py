"""JSON-lines trace files.

Layout: one ``header`` record (format version, config, seed), one record per
infection event, optional ``positions`` records (one per step), and a closing
``final`` record.  Writing a parsed file reproduces it byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from gridflood.engine import DiffusionTrace, Event, SimConfig

FORMAT_VERSION = 1


def _dump(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), sort_keys=True)


def trace_lines(trace: DiffusionTrace) -> list[str]:
    lines = [_dump({"kind": "header", "format_version": FORMAT_VERSION,
                    "config": trace.config.to_dict(), "seed": trace.config.seed})]
    for e in trace.events:
        lines.append(_dump({"kind": "event", "t": e.t, "infectee": e.infectee, "cause_kind": e.cause_kind,
                            "cause_agent": e.cause_agent, "pos": list(e.pos)}))
    if trace.positions is not None:
        for t, pos in enumerate(trace.positions):
            lines.append(_dump({"kind": "positions", "t": t, "positions": pos.tolist()}))
    lines.append(_dump({"kind": "final", "final_time": trace.final_time, "timed_out": trace.timed_out,
                        "steps": trace.steps}))
    return lines


def write_trace(trace: DiffusionTrace, path) -> None:
    Path(path).write_text("\n".join(trace_lines(trace)) + "\n")


def parse_trace(text: str) -> DiffusionTrace:
    records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not records or records[0].get("kind") != "header":
        raise ValueError("trace must start with a header record")
    header = records[0]
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported trace format_version {header.get('format_version')!r}")
    config = SimConfig.from_dict(header["config"])
    events, positions, final = [], [], None
    for rec in records[1:]:
        kind = rec.get("kind")
        if kind == "event":
            events.append(Event(rec["t"], rec["infectee"], rec["cause_kind"], rec["cause_agent"], tuple(rec["pos"])))
        elif kind == "positions":
            if rec["t"] != len(positions):
                raise ValueError("position records must be consecutive from t=0")
            positions.append(np.array(rec["positions"], dtype=np.int64).reshape(-1, config.spec.d))
        elif kind == "final":
            final = rec
        else:
            raise ValueError(f"unknown record kind {kind!r}")
    if final is None:
        raise ValueError("trace has no final record")
    return DiffusionTrace(config, events, final["final_time"], final["steps"], positions or None)


def read_trace(path) -> DiffusionTrace:
    return parse_trace(Path(path).read_text())
