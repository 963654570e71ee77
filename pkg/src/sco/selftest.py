"""Small-fixture oracle checks behind ``sco selftest``."""

from __future__ import annotations

import itertools

import numpy as np

from . import fixtures, oracles
from .logicsim import evaluate, local_transition, transition_index
from .netlist import parse_netlist, serialize_netlist
from .powermodel import Waveform, generate_trace_set, random_pairs, subtract_ensemble_mean, \
    synthetic_templates
from .recovery import activation_sequence, empirical_orthogonality, estimate_response
from .refine import LoadModel, min_cut_bisect, voltage_from_current


def _roundtrip():
    c = fixtures.c17()
    return parse_netlist(serialize_netlist(c)) == c


def _evaluate():
    c = fixtures.c17()
    return all(evaluate(c, v)[n] == oracles.net_value(c, n, v)
               for v in range(32) for n in c.nets)


def _bijection():
    return all([transition_index(p, q, n) for p, q in oracles.enumerate_transitions(n)]
               == list(range(2 ** n * (2 ** n - 1))) for n in (1, 2, 3))


def _local_transitions():
    c = fixtures.c17()
    pairs = random_pairs(c.width, 50, seed=11)
    for prev, cur in pairs:
        for g in c.gates:
            lt = local_transition(c, (int(prev), int(cur)), g.id)
            ref = oracles.gate_transition_by_recursion(c, g.inputs, int(prev), int(cur))
            if (None if lt is None else lt.index) != ref:
                return False
    return True


def _design(c):
    v = range(1 << c.width)
    return list(itertools.product(v, v))


def _estimator_identity():
    c = fixtures.independent()
    tmpl = synthetic_templates(c, length=40, seed=5)
    raw = generate_trace_set(c, tmpl, _design(c))
    ts = subtract_ensemble_mean(raw)
    worst = 0.0
    for gate, j in [(0, 0), (1, 1), (2, 5), (3, 11)]:
        seq = activation_sequence(c, ts, gate, j)
        est = estimate_response(ts, seq).estimate.samples
        ref = oracles.partition_estimate(raw.traces, seq.signs)
        worst = max(worst, np.linalg.norm(est - ref) / np.linalg.norm(ref))
    return worst <= 1e-9


def _self_orthogonality():
    c = fixtures.c17()
    pairs = random_pairs(c.width, 257, seed=3)
    return all(empirical_orthogonality(c, pairs, (k, j), (k, j))[0] == 257
               for k in range(6) for j in (0, 7, 11))


def _bisection():
    ok = True
    for c in (fixtures.c17(), fixtures.chain(4), fixtures.random_dag(10, 4, seed=2)):
        ok &= min_cut_bisect(c, seed=0).cut_size == oracles.exhaustive_min_bisection(c)
    return ok


def _voltage():
    tau, i0, cap = 1e-10, 1e-3, 1e-14
    dt = tau / 50
    cur = Waveform(i0 * np.exp(-np.arange(500) * dt / tau), dt)
    v = voltage_from_current(cur, LoadModel(cap, 0.0)).samples
    exact = i0 * tau / cap * (1 - np.exp(-np.arange(500) * dt / tau))
    return np.max(np.abs(v[1:] - exact[1:]) / exact[1:]) <= 0.01


def _common_mode():
    c = fixtures.c17()
    tmpl = synthetic_templates(c, length=30, seed=1)
    raw = generate_trace_set(c, tmpl, m=500, seed=4)
    off = np.sin(np.arange(30)) * 1e-3
    a = subtract_ensemble_mean(raw)
    b = subtract_ensemble_mean(raw.with_offset(off))
    seq = activation_sequence(c, a, 3, 2)
    ea = estimate_response(a, seq).estimate.samples
    eb = estimate_response(b, seq).estimate.samples
    return np.linalg.norm(ea - eb) <= 1e-12 * np.linalg.norm(ea)


CHECKS = [
    ("netlist round trip (c17)", _roundtrip),
    ("logic evaluation vs recursive oracle (c17)", _evaluate),
    ("transition index bijection (n=1..3)", _bijection),
    ("local transitions vs oracle (c17, 50 pairs)", _local_transitions),
    ("estimator vs conditional-partition oracle", _estimator_identity),
    ("self-orthogonality equals M", _self_orthogonality),
    ("KL bisection vs exhaustive minimum", _bisection),
    ("trapezoid voltage vs closed form (1%)", _voltage),
    ("common-mode rejection", _common_mode),
]


def run_selftest(out=print) -> bool:
    passed = 0
    for name, fn in CHECKS:
        try:
            ok = bool(fn())
        except Exception as exc:  # noqa: BLE001
            ok = False
            name = f"{name} ({exc!r})"
        passed += ok
        out(f"{'PASS' if ok else 'FAIL'} {name}")
    out(f"selftest: {passed}/{len(CHECKS)} passed")
    return passed == len(CHECKS)

