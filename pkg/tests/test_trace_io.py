import json

import pytest

from gridflood.engine import ISLAND, SimConfig, run
from gridflood.grid import GridSpec
from gridflood.trace_io import FORMAT_VERSION, parse_trace, read_trace, trace_lines, write_trace


def test_roundtrip_is_byte_identical(tmp_path):
    tr = run(SimConfig(GridSpec(2, 4), 12, ISLAND, 2, seed=4), record_positions=True)
    path = tmp_path / "t.jsonl"
    write_trace(tr, path)
    back = read_trace(path)
    assert back.events == tr.events and back.final_time == tr.final_time
    assert all((a == b).all() for a, b in zip(back.positions, tr.positions))
    write_trace(back, tmp_path / "u.jsonl")
    assert path.read_bytes() == (tmp_path / "u.jsonl").read_bytes()


def test_header_and_timeout_record():
    tr = run(SimConfig(GridSpec(3, 8), 2, seed=1, max_steps=2))
    lines = [json.loads(x) for x in trace_lines(tr)]
    assert lines[0]["kind"] == "header" and lines[0]["format_version"] == FORMAT_VERSION
    assert lines[-1] == {"kind": "final", "final_time": None, "timed_out": True, "steps": 2}


@pytest.mark.parametrize("text", [
    "",
    '{"kind":"event"}',
    '{"kind":"header","format_version":99,"config":{},"seed":0}',
])
def test_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse_trace(text)


def test_rejects_missing_final():
    tr = run(SimConfig(GridSpec(1, 2), 2, seed=1))
    with pytest.raises(ValueError):
        parse_trace("\n".join(trace_lines(tr)[:-1]))
