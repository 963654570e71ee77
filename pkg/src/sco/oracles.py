"""Brute-force reference computations.

Each function here takes a deliberately different route from the production
code it is compared against (enumeration, recursion, explicit loops), so the
two can cross-check each other in tests and in ``sco selftest``.
"""

from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "enumerate_transitions",
    "exhaustive_min_bisection",
    "net_value",
    "partition_accumulate",
    "partition_estimate",
    "gate_transition_by_recursion",
]


def enumerate_transitions(arity: int) -> list[tuple[int, int]]:
    """Distinct ordered local-vector pairs, lexicographic by (prev, cur)."""
    size = 1 << arity
    return [(p, c) for p in range(size) for c in range(size) if p != c]


def net_value(circuit, net: str, vector: int, _memo=None) -> int:
    """Value of ``net`` by recursive descent from the net towards the inputs."""
    memo = {} if _memo is None else _memo
    if net in memo:
        return memo[net]
    if net in circuit.primary_inputs:
        val = (vector >> circuit.primary_inputs.index(net)) & 1
    else:
        g = next(g for g in circuit.gates if g.output == net)
        row = 0
        for i, n in enumerate(g.inputs):
            row += net_value(circuit, n, vector, memo) * 2 ** i
        val = g.kind.table[row]
    memo[net] = val
    return val


def gate_transition_by_recursion(circuit, nets, prev: int, cur: int):
    """Index of the boundary transition of ``nets`` via the enumeration table, or None."""
    vp = sum(net_value(circuit, n, prev) * 2 ** i for i, n in enumerate(nets))
    vc = sum(net_value(circuit, n, cur) * 2 ** i for i, n in enumerate(nets))
    if vp == vc:
        return None
    return enumerate_transitions(len(nets)).index((vp, vc))


def partition_accumulate(traces, signs) -> np.ndarray:
    """Sum of +1-labelled traces minus sum of -1-labelled traces, by explicit loops."""
    traces = np.asarray(traces, dtype=float)
    plus = np.zeros(traces.shape[1])
    minus = np.zeros(traces.shape[1])
    for row, s in zip(traces, signs):
        if s == 1:
            plus += row
        elif s == -1:
            minus += row
        else:
            raise ValueError("signs must be +1/-1")
    return plus - minus


def partition_estimate(raw_traces, signs) -> np.ndarray:
    """Estimator output from raw (not mean-removed) traces via conditional averages.

    Mean removal followed by the 2/M-scaled signed sum equals
    ``4 p (1 - p) (mean_plus - mean_minus)`` with ``p`` the fraction of +1
    labels; this evaluates the right-hand side directly.
    """
    raw = np.asarray(raw_traces, dtype=float)
    signs = list(signs)
    plus = [row for row, s in zip(raw, signs) if s == 1]
    minus = [row for row, s in zip(raw, signs) if s == -1]
    if not plus or not minus:
        return np.zeros(raw.shape[1])
    p = len(plus) / len(signs)
    mu_plus = sum(plus) / len(plus)
    mu_minus = sum(minus) / len(minus)
    return 4 * p * (1 - p) * (mu_plus - mu_minus)


def _cut(circuit, side_a, side_b):
    members = side_a | side_b
    n = 0
    for k in members:
        out = circuit.gates[k].output
        sinks = {g.id for g in circuit.gates if out in g.inputs and g.id in members}
        other = side_b if k in side_a else side_a
        if sinks & other:
            n += 1
    return n


def exhaustive_min_bisection(circuit, gates=None) -> int:
    """Minimum crossing-net count over every balanced split of ``gates``."""
    gates = sorted(range(circuit.num_gates) if gates is None else gates)
    if len(gates) > 16:
        raise ValueError("exhaustive bisection is limited to 16 gates")
    best = None
    everything = frozenset(gates)
    for a in itertools.combinations(gates, len(gates) // 2):
        a = frozenset(a)
        c = _cut(circuit, a, everything - a)
        best = c if best is None else min(best, c)
    return best
