"""CSV readers and writers for trace sets, template libraries and waveforms.

Floats are written with ``repr`` so every file reads back bit-exactly.
Writers go through a temporary file and ``os.replace``.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .powermodel import GateTemplateSet, TraceSet, Waveform

__all__ = [
    "FormatError",
    "atomic_write",
    "dump_templates",
    "dump_trace_set",
    "dump_waveform",
    "load_templates",
    "load_trace_set",
    "load_waveform",
    "read_templates",
    "read_trace_set",
    "read_waveform",
    "write_templates",
    "write_trace_set",
    "write_waveform",
]


class FormatError(ValueError):
    pass


def _f(x) -> str:
    return repr(float(x))


def _row(values) -> str:
    return ",".join(map(_f, values))


def atomic_write(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _lines(text):
    return [ln for ln in text.splitlines() if ln.strip()]


def _header(line, tag, n_fields):
    parts = line.split(",")
    if parts[:2] != [tag, "v1"] or len(parts) != n_fields:
        raise FormatError(f"expected a '{tag},v1' header with {n_fields} fields, got {line!r}")
    return parts[2:]


def _floats(parts, lineno):
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None


def dump_trace_set(ts: TraceSet) -> str:
    out = [f"SCO-TRACES,v1,{ts.m},{ts.length},{_f(ts.dt)}"]
    for (prev, cur), row in zip(ts.pairs, ts.traces):
        out.append(f"{int(prev):x},{int(cur):x},{_row(row)}")
    return "\n".join(out) + "\n"


def load_trace_set(text: str) -> TraceSet:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty trace-set file")
    m_s, length_s, dt_s = _header(lines[0], "SCO-TRACES", 5)
    m, length, dt = int(m_s), int(length_s), float(dt_s)
    if len(lines) - 1 != m:
        raise FormatError(f"header announces {m} traces, file has {len(lines) - 1}")
    pairs = np.empty((m, 2), dtype=np.int64)
    traces = np.empty((m, length))
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != length + 2:
            raise FormatError(f"line {i + 2}: expected {length} samples")
        try:
            pairs[i] = int(parts[0], 16), int(parts[1], 16)
        except ValueError:
            raise FormatError(f"line {i + 2}: bad hex input vector") from None
        traces[i] = _floats(parts[2:], i + 2)
    return TraceSet(traces, pairs, dt)


def dump_templates(tmpl: GateTemplateSet) -> str:
    out = [f"SCO-TMPL,v1,{_f(tmpl.dt)},{tmpl.length}"]
    for k, arr in enumerate(tmpl.templates):
        for j, row in enumerate(arr):
            out.append(f"{k},{j},{_row(row)}")
    return "\n".join(out) + "\n"


def load_templates(text: str) -> GateTemplateSet:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty template file")
    dt_s, length_s = _header(lines[0], "SCO-TMPL", 4)
    dt, length = float(dt_s), int(length_s)
    rows: dict[int, dict[int, list[float]]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != length + 2:
            raise FormatError(f"line {lineno}: expected {length} samples")
        k, j = int(parts[0]), int(parts[1])
        rows.setdefault(k, {})[j] = _floats(parts[2:], lineno)
    if sorted(rows) != list(range(len(rows))):
        raise FormatError("template gate ids must be dense from 0")
    arrs = []
    for k in range(len(rows)):
        if sorted(rows[k]) != list(range(len(rows[k]))):
            raise FormatError(f"gate {k}: transition indices must be dense from 0")
        arrs.append(np.array([rows[k][j] for j in range(len(rows[k]))]).reshape(-1, length))
    return GateTemplateSet(tuple(arrs), dt)


def dump_waveform(w: Waveform, gate: int, j: int, m: int, positives: int,
                  tag: str = "SCO-RECOVERED") -> str:
    """Plot-ready ``<t>,<value>`` rows under a ``<tag>,v1,gate,j,M,positives,dt`` header."""
    out = [f"{tag},v1,{gate},{j},{m},{positives},{_f(w.dt)}"]
    out += [f"{_f(t)},{_f(v)}" for t, v in zip(w.t, w.samples)]
    return "\n".join(out) + "\n"


def load_waveform(text: str, tag: str = "SCO-RECOVERED") -> tuple[Waveform, dict]:
    lines = _lines(text)
    if not lines:
        raise FormatError("empty waveform file")
    gate, j, m, pos, dt = _header(lines[0], tag, 7)
    meta = {"gate": int(gate), "j": int(j), "m": int(m), "positives": int(pos)}
    vals = [_floats(ln.split(","), i + 2)[1] for i, ln in enumerate(lines[1:])]
    return Waveform(np.array(vals), float(dt)), meta


def write_trace_set(path, ts: TraceSet):
    atomic_write(path, dump_trace_set(ts))


def read_trace_set(path) -> TraceSet:
    return load_trace_set(Path(path).read_text(encoding="utf-8"))


def write_templates(path, tmpl: GateTemplateSet):
    atomic_write(path, dump_templates(tmpl))


def read_templates(path) -> GateTemplateSet:
    return load_templates(Path(path).read_text(encoding="utf-8"))


def write_waveform(path, w: Waveform, gate: int, j: int, m: int, positives: int,
                   tag: str = "SCO-RECOVERED"):
    atomic_write(path, dump_waveform(w, gate, j, m, positives, tag))


def read_waveform(path, tag: str = "SCO-RECOVERED"):
    return load_waveform(Path(path).read_text(encoding="utf-8"), tag)
