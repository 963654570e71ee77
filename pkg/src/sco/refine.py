"""Recursive refinement: min-cut bisection down to a single net.

A block of gates is split into two balanced halves by Kernighan-Lin, the half
holding the target net's driver is treated as a composite gate over its
boundary nets, and the descent repeats until one gate (one driven net)
remains. At every level the composite transition most often coinciding with
the target's activity is recovered from the traces, so the tree records how
the recovery sharpens as the block shrinks.
"""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .logicsim import (_index_array, _pairs_array, as_vector, evaluate,
                       evaluate_batch, local_vectors, transition_index)
from .netlist import DEFAULT_ARITY_CAP, ArityCapExceeded, Circuit
from .powermodel import GateTemplateSet, TraceSet, Waveform, subtract_ensemble_mean
from .recovery import (ActivationSequence, RecoveredResponse, activation_sequence,
                       estimate_response, reference_response)

__all__ = [
    "CompositeBlock",
    "LoadModel",
    "Partition",
    "PartitionTree",
    "ProbeResult",
    "composite_transition",
    "composite_transition_indices",
    "cut_nets",
    "min_cut_bisect",
    "probe_net",
    "voltage_from_current",
]


def cut_nets(circuit: Circuit, side_a: Iterable[int], side_b: Iterable[int]) -> frozenset:
    """Nets driven on one side with at least one sink on the other."""
    a, b = set(side_a), set(side_b)
    out = set()
    for k in a | b:
        net = circuit.gates[k].output
        other = b if k in a else a
        if any(s in other for s in circuit.fanout(net)):
            out.add(net)
    return frozenset(out)


@dataclass(frozen=True)
class Partition:
    side_a: frozenset
    side_b: frozenset
    cut_nets: frozenset

    @property
    def cut_size(self) -> int:
        return len(self.cut_nets)

    def side_of(self, gate: int) -> str:
        return "a" if gate in self.side_a else "b"


class _CutModel:
    """Net-crossing count for a gate subset, with cheap swap deltas."""

    def __init__(self, circuit: Circuit, gates: Iterable[int]):
        self.gates = sorted(set(gates))
        members = set(self.gates)
        # each relevant net is (driver, sinks) restricted to the block
        self.nets = []
        self.touch = {k: [] for k in self.gates}
        for k in self.gates:
            sinks = tuple(s for s in circuit.fanout(circuit.gates[k].output)
                          if s in members and s != k)
            if sinks:
                i = len(self.nets)
                self.nets.append((k, sinks))
                for g in {k, *sinks}:
                    self.touch[g].append(i)

    def crossing(self, i, side):
        d, sinks = self.nets[i]
        return any(side[s] != side[d] for s in sinks)

    def cut(self, side) -> int:
        return sum(self.crossing(i, side) for i in range(len(self.nets)))

    def swap_gain(self, side, a, b) -> int:
        nets = set(self.touch[a]) | set(self.touch[b])
        before = sum(self.crossing(i, side) for i in nets)
        side[a], side[b] = side[b], side[a]
        after = sum(self.crossing(i, side) for i in nets)
        side[a], side[b] = side[b], side[a]
        return before - after


def _kl_run(model: _CutModel, start: dict) -> tuple[dict, list[int]]:
    """Kernighan-Lin passes from ``start``; returns the side map and cut history."""
    side = dict(start)
    history = [model.cut(side)]
    while True:
        work = dict(side)
        locked = set()
        gains, swaps = [], []
        while True:
            best = None
            for a in model.gates:
                if a in locked or work[a] != 0:
                    continue
                for b in model.gates:
                    if b in locked or work[b] != 1:
                        continue
                    g = model.swap_gain(work, a, b)
                    if best is None or g > best[0]:
                        best = (g, a, b)
            if best is None:
                break
            g, a, b = best
            work[a], work[b] = 1, 0
            locked.update((a, b))
            gains.append(g)
            swaps.append((a, b))
        cum = list(itertools.accumulate(gains))
        if not cum or max(cum) <= 0:
            return side, history
        upto = cum.index(max(cum)) + 1
        for a, b in swaps[:upto]:
            side[a], side[b] = 1, 0
        history.append(model.cut(side))


def _random_start(gates, rng):
    perm = [gates[i] for i in rng.permutation(len(gates))]
    half = len(gates) // 2
    return {k: (0 if i < half else 1) for i, k in enumerate(perm)}


def _workers():
    n = int(os.environ.get("SCO_THREADS", "0") or 0)
    return n if n > 0 else min(8, os.cpu_count() or 1)


def min_cut_bisect(circuit: Circuit, gates: Iterable[int] | None = None, seed: int = 0,
                   restarts: int = 8, workers: int | None = None,
                   return_history: bool = False):
    """Balanced min-cut bisection of a block by Kernighan-Lin with random restarts.

    Restart ``r`` begins from a random balanced split drawn from
    ``default_rng([seed, r])``; the restart with the smallest cut wins, ties
    going to the lowest restart number, so the result depends only on
    ``seed``. ``side_a`` is the side holding the block's lowest gate id.
    """
    gates = sorted(set(range(circuit.num_gates) if gates is None else gates))
    if len(gates) < 2:
        raise ValueError(f"bisection needs at least 2 gates, block has {len(gates)}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    model = _CutModel(circuit, gates)

    def run(r):
        start = _random_start(gates, np.random.default_rng([seed, r]))
        return _kl_run(model, start)

    workers = workers or _workers()
    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(r) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (results[r][1][-1], r))
    side, history = results[best]
    a = frozenset(k for k in gates if side[k] == side[gates[0]])
    b = frozenset(gates) - a
    part = Partition(a, b, cut_nets(circuit, a, b))
    if return_history:
        return part, history
    return part


@dataclass(frozen=True)
class CompositeBlock:
    """A set of gates viewed as one gate over its boundary input nets.

    Boundary order: primary inputs in declaration order, then nets driven
    outside the block in driver-gate order.
    """

    gates: frozenset
    boundary_inputs: tuple

    @classmethod
    def of(cls, circuit: Circuit, gates: Iterable[int]) -> "CompositeBlock":
        members = frozenset(gates)
        if not members:
            raise ValueError("a composite block needs at least one gate")
        for k in members:
            circuit.gate(k)
        read = {n for k in members for n in circuit.gates[k].inputs}
        outside = {n for n in read if circuit.driver(n) not in members}
        pis = [n for n in circuit.primary_inputs if n in outside]
        cut = sorted((n for n in outside if circuit.driver(n) is not None),
                     key=circuit.driver)
        return cls(members, tuple(pis) + tuple(cut))

    @property
    def arity(self) -> int:
        return len(self.boundary_inputs)

    def check_arity(self, cap: int = DEFAULT_ARITY_CAP, level: int | None = None):
        if self.arity > cap:
            raise ArityCapExceeded(self.arity, cap, level)

    @property
    def alphabet_size(self) -> int:
        n = self.arity
        return (1 << n) * ((1 << n) - 1)


def composite_transition(circuit: Circuit, block: CompositeBlock, pair,
                         cap: int = DEFAULT_ARITY_CAP) -> int | None:
    """Index of the block's boundary-vector transition for ``pair``; None if unchanged."""
    block.check_arity(cap)
    prev, cur = (as_vector(circuit, v) for v in pair)
    before, after = evaluate(circuit, prev), evaluate(circuit, cur)
    vp = sum(before[n] << i for i, n in enumerate(block.boundary_inputs))
    vc = sum(after[n] << i for i, n in enumerate(block.boundary_inputs))
    if vp == vc:
        return None
    return transition_index(vp, vc, block.arity)


def composite_transition_indices(circuit: Circuit, block: CompositeBlock, pairs,
                                 cap: int = DEFAULT_ARITY_CAP) -> np.ndarray:
    """Vectorized :func:`composite_transition`, -1 where the boundary holds."""
    block.check_arity(cap)
    arr = _pairs_array(circuit, pairs)
    if block.arity == 0:
        return np.full(len(arr), -1, dtype=np.int64)
    vp = local_vectors(evaluate_batch(circuit, arr[:, 0]), block.boundary_inputs)
    vc = local_vectors(evaluate_batch(circuit, arr[:, 1]), block.boundary_inputs)
    return _index_array(vp, vc, block.arity)


@dataclass
class PartitionTree:
    """One level of the descent towards the target net."""

    level: int
    block: CompositeBlock
    partition: Partition | None = None
    children: list = field(default_factory=list)
    transition: int | None = None
    recovered: RecoveredResponse | None = None
    snr_db: float | None = None
    kept: str | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def to_dict(self) -> dict:
        d = {
            "level": self.level,
            "gates": sorted(self.block.gates),
            "boundary": list(self.block.boundary_inputs),
            "arity": self.block.arity,
        }
        if self.partition is not None:
            d["cut_size"] = self.partition.cut_size
            d["cut_nets"] = sorted(self.partition.cut_nets)
            d["descend"] = self.kept
        if self.transition is not None:
            d["transition"] = self.transition
        if self.recovered is not None:
            d["positives"] = self.recovered.positives
        d["snr_db"] = self.snr_db
        d["children"] = [c.to_dict() for c in self.children]
        return d


@dataclass
class ProbeResult:
    tree: PartitionTree
    path: list
    leaf: RecoveredResponse | None
    failed_level: int | None = None
    error: ArityCapExceeded | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def cut_sizes(self) -> list[int]:
        return [n.partition.cut_size for n in self.path if n.partition is not None]

    def report(self) -> str:
        d = {"tree": self.tree.to_dict(), "cut_sizes": self.cut_sizes}
        if self.error is not None:
            d["failed_level"] = self.failed_level
            d["error"] = str(self.error)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _composite_target(idx: np.ndarray, fires: np.ndarray) -> int | None:
    # composite transition that most often accompanies the target; ties -> lowest
    hits = idx[fires & (idx >= 0)]
    if hits.size == 0:
        return None
    vals, counts = np.unique(hits, return_counts=True)
    return int(vals[np.argmax(counts)])


def probe_net(circuit: Circuit, templates: GateTemplateSet | None, traces: TraceSet,
              net: str, j: int, seed: int = 0, cap: int = DEFAULT_ARITY_CAP,
              restarts: int = 8) -> ProbeResult:
    """Descend the bisection tree to the gate driving ``net`` and recover transition ``j``.

    ``traces`` may be raw or mean removed. When ``templates`` is given each
    level carries an SNR against the interference-free response of its block.
    An arity-cap violation stops the descent; the partial tree is returned with
    ``failed_level`` set.
    """
    target = circuit.driver(net)
    if target is None:
        raise ValueError(f"net {net!r} is a primary input; it has no driving gate")
    if not traces.mean_removed:
        traces = subtract_ensemble_mean(traces)
    fires = activation_sequence(circuit, traces, target, j).signs == 1

    gates = frozenset(range(circuit.num_gates))
    level = 0
    root = node = None
    path = []
    while True:
        block = CompositeBlock.of(circuit, gates)
        child = PartitionTree(level, block)
        if node is None:
            root = child
        else:
            node.children.append(child)
        node = child
        path.append(node)
        if len(gates) == 1:
            seq = activation_sequence(circuit, traces, target, j)
            truth = None
            if templates is not None:
                truth = reference_response(circuit, templates, (target, j), traces.pairs)
            rec = estimate_response(traces, seq, truth if _has_energy(truth) else None)
            node.transition, node.recovered, node.snr_db = j, rec, rec.snr_db
            return ProbeResult(root, path, rec)
        try:
            block.check_arity(cap, level)
        except ArityCapExceeded as exc:
            return ProbeResult(root, path, None, level, exc)
        _recover_level(circuit, templates, traces, node, fires, target)
        part = min_cut_bisect(circuit, gates, seed=seed + level, restarts=restarts)
        node.partition = part
        node.kept = part.side_of(target)
        gates = part.side_a if node.kept == "a" else part.side_b
        level += 1


def _has_energy(w):
    return w is not None and bool(np.any(w.samples))


def _recover_level(circuit, templates, traces, node, fires, target):
    idx = composite_transition_indices(circuit, node.block, traces.pairs)
    jc = _composite_target(idx, fires)
    if jc is None:
        return
    signs = np.where(idx == jc, 1, -1).astype(np.int8)
    seq = ActivationSequence(target, jc, signs)
    truth = None
    if templates is not None:
        truth = reference_response(circuit, templates, (target, jc), traces.pairs,
                                   gates=sorted(node.block.gates), signs=signs)
    rec = estimate_response(traces, seq, truth if _has_energy(truth) else None)
    node.transition, node.recovered, node.snr_db = jc, rec, rec.snr_db


@dataclass(frozen=True)
class LoadModel:
    """Lumped net capacitance (farads) and initial node voltage (volts)."""

    capacitance: float = 10e-15
    v0: float = 0.0

    def __post_init__(self):
        if not self.capacitance > 0:
            raise ValueError(f"capacitance must be positive, got {self.capacitance!r}")


def voltage_from_current(current: Waveform, load: LoadModel = LoadModel()) -> Waveform:
    """Charge the load capacitance with ``current``: ``v0 + (1/C) * integral``.

    Trapezoidal rule on the current's own grid.
    """
    q = cumulative_trapezoid(current.samples, dx=current.dt, initial=0.0)
    return Waveform(load.v0 + q / load.capacitance, current.dt)
