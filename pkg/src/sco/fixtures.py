"""Small reference circuits and a random combinational-DAG generator."""

from __future__ import annotations

import numpy as np

from .netlist import BUILTIN_KINDS, Circuit, parse_netlist

__all__ = ["C17", "INVERTER", "c17", "chain", "independent", "inverter", "random_dag",
           "FIXTURES"]

INVERTER = """\
input a
output y
gate g0 INV a -> y
"""

# NAND-only ISCAS-85 c17
C17 = """\
# ISCAS-85 c17
input N1
input N2
input N3
input N6
input N7
output N22
output N23
gate G10 NAND2 N1 N3 -> N10
gate G11 NAND2 N3 N6 -> N11
gate G16 NAND2 N2 N11 -> N16
gate G19 NAND2 N11 N7 -> N19
gate G22 NAND2 N10 N16 -> N22
gate G23 NAND2 N16 N19 -> N23
"""


def inverter() -> Circuit:
    return parse_netlist(INVERTER)


def c17() -> Circuit:
    return parse_netlist(C17)


def chain(n: int = 4, kind: str = "NAND2") -> Circuit:
    """``n`` gates in series; two-input kinds take one fresh primary input each.

    Gate 0 of a two-input chain reads two primary inputs.
    """
    arity = BUILTIN_KINDS[kind].arity
    pis = ["x0"]
    gates = []
    prev = "x0"
    for k in range(n):
        ins = [prev]
        for _ in range(arity - 1):
            pis.append(f"x{len(pis)}")
            ins.append(pis[-1])
        out = f"n{k}"
        gates.append((f"g{k}", kind, ins, out))
        prev = out
    return Circuit.build(pis, [prev], gates)


def independent(kinds=("INV", "BUF", "NAND2", "XOR2")) -> Circuit:
    """One gate per kind, each on its own primary inputs (no shared nets)."""
    pis, gates, pos = [], [], []
    for k, name in enumerate(kinds):
        ins = []
        for _ in range(BUILTIN_KINDS[name].arity):
            pis.append(f"i{len(pis)}")
            ins.append(pis[-1])
        gates.append((f"g{k}", name, ins, f"y{k}"))
        pos.append(f"y{k}")
    return Circuit.build(pis, pos, gates)


def random_dag(n_gates: int, n_inputs: int, seed: int, fan_in_pool: int = 4) -> Circuit:
    """Random combinational circuit of two-input built-in gates.

    Each gate reads from the primary inputs and the outputs of earlier gates,
    favouring the ``fan_in_pool`` most recent nets so the graph has locality.
    """
    rng = np.random.default_rng(seed)
    kinds = [k for k in BUILTIN_KINDS.values() if k.arity == 2]
    pis = [f"i{i}" for i in range(n_inputs)]
    nets = list(pis)
    gates = []
    used = set()
    for k in range(n_gates):
        recent = nets[-fan_in_pool:]
        pool = recent if rng.random() < 0.7 else nets
        a, b = rng.choice(len(pool), size=2, replace=len(pool) < 2)
        ins = [pool[a], pool[b]]
        used.update(ins)
        kind = kinds[rng.integers(len(kinds))]
        gates.append((f"g{k}", kind, ins, f"n{k}"))
        nets.append(f"n{k}")
    outs = [f"n{k}" for k in range(n_gates) if f"n{k}" not in used] or [f"n{n_gates - 1}"]
    return Circuit.build(pis, outs, gates)


FIXTURES = {
    "inv": inverter,
    "c17": c17,
    "chain4": lambda: chain(4),
    "indep4": independent,
}
