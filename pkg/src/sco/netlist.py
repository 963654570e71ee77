"""Combinational netlists: parsing, validation, canonical serialization.

The text format is line oriented, ``#`` starts a comment::

    table MAJ3 3 00010111
    input a
    input b
    output y
    gate g0 NAND2 a b -> y

Gate ids are dense integers assigned in declaration order; the textual gate
name is kept for round-tripping only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "BUILTIN_KINDS",
    "DEFAULT_ARITY_CAP",
    "ArityCapExceeded",
    "ArityMismatch",
    "Circuit",
    "CombinationalCycle",
    "Gate",
    "GateKind",
    "MultiplyDrivenNet",
    "NetlistError",
    "NetlistSyntaxError",
    "UndrivenNet",
    "UnknownGateKind",
    "parse_netlist",
    "serialize_netlist",
    "transition_alphabet_size",
]

DEFAULT_ARITY_CAP = 8


class NetlistError(ValueError):
    """Base class for every netlist validation failure."""


class NetlistSyntaxError(NetlistError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownGateKind(NetlistError):
    def __init__(self, kind: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown gate kind {kind!r}{where}")
        self.kind = kind


class ArityMismatch(NetlistError):
    def __init__(self, gate: str, kind: str, expected: int, got: int):
        super().__init__(f"gate {gate!r} of kind {kind} expects {expected} inputs, got {got}")
        self.gate = gate
        self.expected = expected
        self.got = got


class MultiplyDrivenNet(NetlistError):
    def __init__(self, net: str):
        super().__init__(f"net {net!r} has more than one driver")
        self.net = net


class UndrivenNet(NetlistError):
    def __init__(self, net: str):
        super().__init__(f"net {net!r} has no driver")
        self.net = net


class CombinationalCycle(NetlistError):
    def __init__(self, nets: Sequence[str]):
        super().__init__("combinational cycle through nets " + " -> ".join(nets))
        self.nets = tuple(nets)


class ArityCapExceeded(ValueError):
    """A (composite) gate has more input bits than the configured cap."""

    def __init__(self, arity: int, cap: int, level: int | None = None):
        where = f" at recursion level {level}" if level is not None else ""
        super().__init__(f"arity {arity} exceeds cap {cap}{where}")
        self.arity = arity
        self.cap = cap
        self.level = level


@dataclass(frozen=True)
class GateKind:
    """A boolean function given by its truth table.

    ``table[v]`` is the output for local input vector ``v``, where input 0 of
    the gate is bit 0 of ``v``.
    """

    name: str
    arity: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"gate kind {self.name}: arity must be >= 1")
        if len(self.table) != 1 << self.arity:
            raise ValueError(
                f"gate kind {self.name}: truth table has {len(self.table)} entries, "
                f"expected {1 << self.arity}"
            )
        if any(b not in (0, 1) for b in self.table):
            raise ValueError(f"gate kind {self.name}: truth table entries must be 0/1")

    @classmethod
    def from_function(cls, name, arity, fn):
        table = []
        for v in range(1 << arity):
            bits = [(v >> i) & 1 for i in range(arity)]
            table.append(int(bool(fn(*bits))))
        return cls(name, arity, tuple(table))

    @property
    def bitstring(self) -> str:
        return "".join(str(b) for b in self.table)


BUILTIN_KINDS: dict[str, GateKind] = {
    k.name: k
    for k in (
        GateKind.from_function("INV", 1, lambda a: not a),
        GateKind.from_function("BUF", 1, lambda a: a),
        GateKind.from_function("AND2", 2, lambda a, b: a and b),
        GateKind.from_function("NAND2", 2, lambda a, b: not (a and b)),
        GateKind.from_function("OR2", 2, lambda a, b: a or b),
        GateKind.from_function("NOR2", 2, lambda a, b: not (a or b)),
        GateKind.from_function("XOR2", 2, lambda a, b: a ^ b),
        GateKind.from_function("XNOR2", 2, lambda a, b: not (a ^ b)),
    )
}


@dataclass(frozen=True)
class Gate:
    id: int
    name: str
    kind: GateKind
    inputs: tuple[str, ...]
    output: str

    @property
    def arity(self) -> int:
        return self.kind.arity


@dataclass(frozen=True, eq=False)
class Circuit:
    """Validated, immutable combinational circuit.

    Construct through :func:`parse_netlist` or :meth:`Circuit.build`; both run
    the full validation. Equality is structural.
    """

    gates: tuple[Gate, ...]
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]
    _driver: dict = field(repr=False, compare=False)
    _fanout: dict = field(repr=False, compare=False)
    _order: tuple[int, ...] = field(repr=False, compare=False)

    @classmethod
    def build(cls, primary_inputs: Iterable[str], primary_outputs: Iterable[str],
              gates: Iterable[tuple]) -> "Circuit":
        """Build from ``(name, kind, inputs, output)`` tuples.

        ``kind`` is a :class:`GateKind` or the name of a built-in kind.
        """
        pis = tuple(primary_inputs)
        pos = tuple(primary_outputs)
        built = []
        for k, (name, kind, inputs, output) in enumerate(gates):
            if isinstance(kind, str):
                if kind not in BUILTIN_KINDS:
                    raise UnknownGateKind(kind)
                kind = BUILTIN_KINDS[kind]
            inputs = tuple(inputs)
            if len(inputs) != kind.arity:
                raise ArityMismatch(name, kind.name, kind.arity, len(inputs))
            built.append(Gate(k, name, kind, inputs, output))
        return cls._validated(tuple(built), pis, pos)

    @classmethod
    def _validated(cls, gates, pis, pos):
        driver: dict[str, int | None] = {}
        for net in pis:
            if net in driver:
                raise MultiplyDrivenNet(net)
            driver[net] = None
        names = set()
        for g in gates:
            if g.name in names:
                raise NetlistError(f"duplicate gate name {g.name!r}")
            names.add(g.name)
            if g.output in driver:
                raise MultiplyDrivenNet(g.output)
            driver[g.output] = g.id
        fanout: dict[str, list[int]] = {net: [] for net in driver}
        for g in gates:
            for net in g.inputs:
                if net not in driver:
                    raise UndrivenNet(net)
                if g.id not in fanout[net]:
                    fanout[net].append(g.id)
        for net in pos:
            if net not in driver:
                raise UndrivenNet(net)
        order = _topological_order(gates, driver)
        return cls(gates, pis, pos, driver,
                   {n: tuple(v) for n, v in fanout.items()}, order)

    @property
    def num_gates(self) -> int:
        return len(self.gates)

    @property
    def width(self) -> int:
        """Number of primary-input bits."""
        return len(self.primary_inputs)

    @property
    def nets(self) -> tuple[str, ...]:
        """All nets: primary inputs first, then gate outputs by gate id."""
        return self.primary_inputs + tuple(g.output for g in self.gates)

    @property
    def topological_order(self) -> tuple[int, ...]:
        return self._order

    @property
    def kinds(self) -> dict[str, GateKind]:
        return {g.kind.name: g.kind for g in self.gates}

    def driver(self, net: str) -> int | None:
        """Gate id driving ``net``, or None for a primary input."""
        try:
            return self._driver[net]
        except KeyError:
            raise KeyError(f"unknown net {net!r}") from None

    def fanout(self, net: str) -> tuple[int, ...]:
        return self._fanout[net]

    def gate(self, k: int) -> Gate:
        if not 0 <= k < len(self.gates):
            raise IndexError(f"unknown gate id {k} (circuit has {len(self.gates)} gates)")
        return self.gates[k]

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.gates == other.gates
                and self.primary_inputs == other.primary_inputs
                and self.primary_outputs == other.primary_outputs)

    def __hash__(self):
        return hash((self.gates, self.primary_inputs, self.primary_outputs))


def _topological_order(gates, driver):
    # Kahn's algorithm, smallest gate id first so the order is canonical.
    import heapq

    indeg = [0] * len(gates)
    succ: list[list[int]] = [[] for _ in gates]
    for g in gates:
        for net in set(g.inputs):
            d = driver[net]
            if d is not None:
                indeg[g.id] += 1
                succ[d].append(g.id)
    ready = [g.id for g in gates if indeg[g.id] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        k = heapq.heappop(ready)
        order.append(k)
        for s in succ[k]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(ready, s)
    if len(order) != len(gates):
        raise CombinationalCycle(_find_cycle(gates, driver, set(order)))
    return tuple(order)


def _find_cycle(gates, driver, done):
    # Walk backwards through unresolved gates until a gate repeats.
    start = next(g.id for g in gates if g.id not in done)
    path = [start]
    seen = {start: 0}
    k = start
    while True:
        k = next(driver[n] for n in gates[k].inputs
                 if driver[n] is not None and driver[n] not in done)
        if k in seen:
            cyc = path[seen[k]:]
            return [gates[i].output for i in reversed(cyc)] + [gates[cyc[-1]].output]
        seen[k] = len(path)
        path.append(k)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\]$]*$|[0-9]+$")


def _tokens(line: str):
    """Split into ``(column, token)`` with 1-based columns, comment stripped."""
    line = line.split("#", 1)[0]
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]


def parse_netlist(text: str) -> Circuit:
    """Parse and validate netlist source text.

    Raises
    ------
    NetlistSyntaxError
        Malformed line; carries ``line`` and ``column``.
    UnknownGateKind, ArityMismatch, MultiplyDrivenNet, UndrivenNet, CombinationalCycle
        Structural problems, each naming the offending gate or net.
    """
    kinds = dict(BUILTIN_KINDS)
    pis: list[str] = []
    pos: list[str] = []
    gates: list[Gate] = []

    def ident(col, tok, lineno):
        if not _IDENT.match(tok):
            raise NetlistSyntaxError(f"invalid identifier {tok!r}", lineno, col)
        return tok

    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _tokens(line)
        if not toks:
            continue
        col0, head = toks[0]
        args = toks[1:]
        if head in ("input", "output"):
            if len(args) != 1:
                col = args[1][0] if len(args) > 1 else col0 + len(head)
                raise NetlistSyntaxError(f"'{head}' takes exactly one net", lineno, col)
            net = ident(*args[0], lineno)
            (pis if head == "input" else pos).append(net)
        elif head == "table":
            if len(args) != 3:
                raise NetlistSyntaxError("expected 'table <KIND> <arity> <bitstring>'",
                                         lineno, col0)
            (c1, name), (c2, arity_s), (c3, bits) = args
            ident(c1, name, lineno)
            if name in kinds:
                raise NetlistSyntaxError(f"gate kind {name!r} already defined", lineno, c1)
            if not arity_s.isdigit() or int(arity_s) < 1:
                raise NetlistSyntaxError(f"invalid arity {arity_s!r}", lineno, c2)
            arity = int(arity_s)
            if set(bits) - {"0", "1"} or len(bits) != 1 << arity:
                raise NetlistSyntaxError(
                    f"bitstring must have {1 << arity} binary digits", lineno, c3)
            kinds[name] = GateKind(name, arity, tuple(int(b) for b in bits))
        elif head == "gate":
            arrows = [i for i, (_, t) in enumerate(args) if t == "->"]
            if len(arrows) != 1 or len(args) < 4 or arrows[0] != len(args) - 2:
                raise NetlistSyntaxError(
                    "expected 'gate <id> <KIND> <in1> [<in2> ...] -> <out>'", lineno, col0)
            name = ident(*args[0], lineno)
            kind_name = args[1][1]
            if kind_name not in kinds:
                raise UnknownGateKind(kind_name, lineno)
            kind = kinds[kind_name]
            inputs = tuple(ident(c, t, lineno) for c, t in args[2:-2])
            output = ident(*args[-1], lineno)
            if len(inputs) != kind.arity:
                raise ArityMismatch(name, kind_name, kind.arity, len(inputs))
            gates.append(Gate(len(gates), name, kind, inputs, output))
        else:
            raise NetlistSyntaxError(f"unknown directive {head!r}", lineno, col0)

    return Circuit._validated(tuple(gates), tuple(pis), tuple(pos))


def serialize_netlist(circuit: Circuit) -> str:
    """Canonical text: custom tables, inputs, outputs, then gates by id."""
    lines = []
    custom = sorted({g.kind.name: g.kind for g in circuit.gates
                     if BUILTIN_KINDS.get(g.kind.name) != g.kind}.values(),
                    key=lambda k: k.name)
    for k in custom:
        lines.append(f"table {k.name} {k.arity} {k.bitstring}")
    lines += [f"input {n}" for n in circuit.primary_inputs]
    lines += [f"output {n}" for n in circuit.primary_outputs]
    for g in circuit.gates:
        lines.append(f"gate {g.name} {g.kind.name} {' '.join(g.inputs)} -> {g.output}")
    return "\n".join(lines) + "\n"


def transition_alphabet_size(gate: Gate | int, cap: int | None = DEFAULT_ARITY_CAP) -> int:
    """Number of ordered pairs of distinct local input vectors, ``2^n (2^n - 1)``.

    Accepts a :class:`Gate` or a bare arity. Raises :class:`ArityCapExceeded`
    when the arity is above ``cap`` (pass ``cap=None`` to disable).
    """
    n = gate.arity if isinstance(gate, Gate) else int(gate)
    if n < 1:
        raise ValueError("arity must be >= 1")
    if cap is not None and n > cap:
        raise ArityCapExceeded(n, cap)
    return (1 << n) * ((1 << n) - 1)
