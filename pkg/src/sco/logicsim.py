"""Zero-delay logic evaluation and per-gate transition activation.

Input vectors are plain integers: bit ``i`` is the value of the ``i``-th
declared primary input. A sequence of 0/1 values is accepted anywhere a
vector is expected.

A gate's local transition is the ordered pair ``(v_prev, v_cur)`` of its
local input vectors under the previous and current primary-input vectors.
Pairs with ``v_prev != v_cur`` are numbered by :func:`transition_index`.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .netlist import Circuit, transition_alphabet_size

__all__ = [
    "LocalTransition",
    "TransitionPair",
    "activation_indicator",
    "activation_sign",
    "activation_signs",
    "as_vector",
    "evaluate",
    "evaluate_batch",
    "local_transition",
    "local_transition_indices",
    "local_vectors",
    "transition_index",
    "transition_pair",
]

MAX_WIDTH = 62


class TransitionPair(NamedTuple):
    """Primary-input transition applied at t=0: ``prev`` (I_{i-1}) -> ``cur`` (I_i)."""

    prev: int
    cur: int


class LocalTransition(NamedTuple):
    gate: int
    index: int
    prev: int
    cur: int


def as_vector(circuit: Circuit, v) -> int:
    """Normalize an input vector to an int, checking it against the circuit width."""
    w = circuit.width
    if isinstance(v, (int, np.integer)):
        v = int(v)
        if v < 0 or v >> w:
            raise ValueError(f"input vector {v:#x} does not fit {w} primary inputs")
        return v
    bits = list(v)
    if len(bits) != w:
        raise ValueError(f"input vector has width {len(bits)}, circuit has {w} primary inputs")
    out = 0
    for i, b in enumerate(bits):
        if b not in (0, 1, True, False):
            raise ValueError(f"input bit {i} is {b!r}, expected 0 or 1")
        out |= int(b) << i
    return out


def _as_pair(circuit, pair) -> TransitionPair:
    prev, cur = pair
    return TransitionPair(as_vector(circuit, prev), as_vector(circuit, cur))


def transition_index(v_prev: int, v_cur: int, arity: int) -> int:
    """Bijection from distinct ordered pairs of n-bit vectors onto ``0..N_k-1``."""
    size = 1 << arity
    if not (0 <= v_prev < size and 0 <= v_cur < size):
        raise ValueError(f"local vectors must lie in 0..{size - 1}")
    if v_prev == v_cur:
        raise ValueError("identity pair has no transition index")
    return v_prev * (size - 1) + (v_cur if v_cur < v_prev else v_cur - 1)


def transition_pair(j: int, arity: int) -> tuple[int, int]:
    """Inverse of :func:`transition_index`."""
    size = 1 << arity
    if not 0 <= j < size * (size - 1):
        raise ValueError(f"transition index {j} out of range for arity {arity}")
    v_prev, r = divmod(j, size - 1)
    return v_prev, (r if r < v_prev else r + 1)


def evaluate(circuit: Circuit, vector) -> dict[str, int]:
    """Steady-state value of every net for one primary-input vector."""
    v = as_vector(circuit, vector)
    values = {net: (v >> i) & 1 for i, net in enumerate(circuit.primary_inputs)}
    for k in circuit.topological_order:
        g = circuit.gates[k]
        local = 0
        for i, net in enumerate(g.inputs):
            local |= values[net] << i
        values[g.output] = g.kind.table[local]
    return values


def _check_batch(circuit, vectors):
    if circuit.width > MAX_WIDTH:
        raise ValueError(f"batch evaluation supports at most {MAX_WIDTH} primary inputs")
    vectors = np.asarray(vectors, dtype=np.int64)
    if vectors.size and (vectors.min() < 0 or (vectors >> circuit.width).any()):
        raise ValueError(f"input vectors do not fit {circuit.width} primary inputs")
    return vectors


def evaluate_batch(circuit: Circuit, vectors) -> dict[str, np.ndarray]:
    """Vectorized :func:`evaluate`; returns one uint8 array per net."""
    vectors = _check_batch(circuit, vectors)
    values = {net: ((vectors >> i) & 1).astype(np.uint8)
              for i, net in enumerate(circuit.primary_inputs)}
    for k in circuit.topological_order:
        g = circuit.gates[k]
        local = np.zeros(vectors.shape, dtype=np.int64)
        for i, net in enumerate(g.inputs):
            local |= values[net].astype(np.int64) << i
        values[g.output] = np.asarray(g.kind.table, dtype=np.uint8)[local]
    return values


def local_vectors(values: dict[str, np.ndarray], nets: Sequence[str]) -> np.ndarray:
    """Pack the values of ``nets`` into integers, ``nets[0]`` as bit 0."""
    first = values[nets[0]]
    out = np.zeros(np.shape(first), dtype=np.int64)
    for i, net in enumerate(nets):
        out |= np.asarray(values[net], dtype=np.int64) << i
    return out


def local_transition(circuit: Circuit, pair, gate: int) -> LocalTransition | None:
    """The transition gate ``gate`` undergoes for ``pair``, or None if its inputs hold."""
    g = circuit.gate(gate)
    prev, cur = _as_pair(circuit, pair)
    before, after = evaluate(circuit, prev), evaluate(circuit, cur)
    vp = sum(before[n] << i for i, n in enumerate(g.inputs))
    vc = sum(after[n] << i for i, n in enumerate(g.inputs))
    if vp == vc:
        return None
    return LocalTransition(gate, transition_index(vp, vc, g.arity), vp, vc)


def activation_sign(circuit: Circuit, pair, gate: int, j: int) -> int:
    """Signed activation T in {-1, 0, +1}.

    +1 when the gate undergoes transition ``j``, 0 when ``j`` is outside the
    gate's alphabet, -1 otherwise (inputs unchanged, or a different transition).
    """
    g = circuit.gate(gate)
    if j < 0:
        raise ValueError(f"transition index {j} is negative")
    if j >= transition_alphabet_size(g, cap=None):
        return 0
    lt = local_transition(circuit, pair, gate)
    return 1 if lt is not None and lt.index == j else -1


def activation_indicator(sign: int, occurrence: bool = False) -> float:
    """A = (1 + T) / 2.

    With ``occurrence=True`` the out-of-range case T=0 maps to 0 instead of 1/2,
    which is how the indicator is used inside trace superposition.
    """
    if sign not in (-1, 0, 1):
        raise ValueError(f"activation sign must be -1, 0 or +1, got {sign!r}")
    if occurrence and sign == 0:
        return 0.0
    return (1 + sign) / 2


def _pairs_array(circuit, pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        if arr.size == 0:
            return np.zeros((0, 2), dtype=np.int64)
        raise ValueError("pairs must have shape (M, 2)")
    _check_batch(circuit, arr)
    return arr


def local_transition_indices(circuit: Circuit, pairs, gates: Sequence[int] | None = None
                             ) -> np.ndarray:
    """Transition index of each gate for each pair, -1 where the gate holds.

    Returns an int64 array of shape ``(len(gates), M)``.
    """
    arr = _pairs_array(circuit, pairs)
    if gates is None:
        gates = range(circuit.num_gates)
    gates = [circuit.gate(k).id for k in gates]
    before = evaluate_batch(circuit, arr[:, 0])
    after = evaluate_batch(circuit, arr[:, 1])
    out = np.full((len(gates), len(arr)), -1, dtype=np.int64)
    for row, k in enumerate(gates):
        g = circuit.gates[k]
        vp = local_vectors(before, g.inputs)
        vc = local_vectors(after, g.inputs)
        out[row] = _index_array(vp, vc, g.arity)
    return out


def _index_array(vp, vc, arity):
    size = 1 << arity
    idx = vp * (size - 1) + np.where(vc < vp, vc, vc - 1)
    return np.where(vp == vc, -1, idx)


def activation_signs(circuit: Circuit, pairs, gate: int, j: int) -> np.ndarray:
    """Vectorized :func:`activation_sign` over a list of pairs (int8 array)."""
    g = circuit.gate(gate)
    arr = _pairs_array(circuit, pairs)
    if j < 0:
        raise ValueError(f"transition index {j} is negative")
    if j >= transition_alphabet_size(g, cap=None):
        return np.zeros(len(arr), dtype=np.int8)
    idx = local_transition_indices(circuit, arr, [gate])[0]
    return np.where(idx == j, 1, -1).astype(np.int8)
