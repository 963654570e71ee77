"""Step-response templates and synthetic power traces.

A trace is the supply current recorded over ``[0, T]`` after a primary-input
transition applied at t=0. It is modelled as the sum of the step responses of
every gate whose local input vector changed, plus optional white noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .logicsim import _pairs_array, as_vector, local_transition_indices
from .netlist import Circuit, transition_alphabet_size


__all__ = [
    "GateTemplateSet",
    "NoiseSpec",
    "TraceSet",
    "Waveform",
    "generate_trace_set",
    "make_template",
    "random_pairs",
    "subtract_ensemble_mean",
    "synthesize_trace",
    "synthesize_traces",
    "synthetic_templates",
]


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled signal starting at t=0 (amperes or volts)."""

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        s = _frozen(self.samples)
        if s.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if not np.all(np.isfinite(s)):
            raise ValueError("waveform samples must be finite")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"sample period must be positive, got {self.dt!r}")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return len(self.samples)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt

    def same_grid(self, other: "Waveform") -> bool:
        return self.dt == other.dt and len(self) == len(other)

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.dt == other.dt and np.array_equal(self.samples, other.samples)


def make_template(peak: float, tau_rise: float, tau_fall: float, dt: float,
                  length: int) -> Waveform:
    """Difference-of-exponentials current pulse.

    ``samples[m] = peak * (exp(-m dt / tau_fall) - exp(-m dt / tau_rise))``,
    which is exactly zero at m=0 and peaks near
    ``ln(tau_fall / tau_rise) / (1/tau_rise - 1/tau_fall)``.
    """
    if tau_rise <= 0 or tau_fall <= 0:
        raise ValueError("time constants must be positive")
    if tau_fall <= tau_rise:
        raise ValueError("fall constant must exceed rise constant")
    if length < 1:
        raise ValueError("length must be >= 1")
    t = np.arange(length) * dt
    return Waveform(peak * (np.exp(-t / tau_fall) - np.exp(-t / tau_rise)), dt)


@dataclass(frozen=True, eq=False)
class GateTemplateSet:
    """Step current responses ``templates[k][j]`` for every gate k and transition j.

    Each ``templates[k]`` is a read-only array of shape ``(N_k, length)``.
    Output loads are folded into the responses.
    """

    templates: tuple
    dt: float

    def __post_init__(self):
        arrs = tuple(_frozen(a) for a in self.templates)
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"sample period must be positive, got {self.dt!r}")
        lengths = {a.shape[1] for a in arrs if a.ndim == 2}
        if any(a.ndim != 2 for a in arrs) or len(lengths) > 1:
            raise ValueError("every gate's templates must be an (N_k, length) array "
                             "with one shared length")
        for a in arrs:
            if not np.all(np.isfinite(a)):
                raise ValueError("template samples must be finite")
        object.__setattr__(self, "templates", arrs)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def length(self) -> int:
        return self.templates[0].shape[1] if self.templates else 0

    @property
    def num_gates(self) -> int:
        return len(self.templates)

    def waveform(self, gate: int, j: int) -> Waveform:
        return Waveform(self.templates[gate][j], self.dt)

    def check(self, circuit: Circuit):
        """Raise ValueError unless the set covers exactly the circuit's gates."""
        if len(self.templates) != circuit.num_gates:
            raise ValueError(f"template set covers {len(self.templates)} gates, "
                             f"circuit has {circuit.num_gates}")
        for g, arr in zip(circuit.gates, self.templates):
            n = transition_alphabet_size(g, cap=None)
            if arr.shape[0] != n:
                raise ValueError(f"gate {g.id} ({g.name}) has {arr.shape[0]} templates, "
                                 f"its transition alphabet has {n}")

    def restricted(self, gates: Iterable[int]) -> "GateTemplateSet":
        """Copy with every gate outside ``gates`` silenced (all-zero responses)."""
        keep = set(gates)
        return GateTemplateSet(
            tuple(a if k in keep else np.zeros_like(a) for k, a in enumerate(self.templates)),
            self.dt)

    def __eq__(self, other):
        if not isinstance(other, GateTemplateSet):
            return NotImplemented
        return (self.dt == other.dt and len(self.templates) == len(other.templates)
                and all(np.array_equal(a, b) for a, b in zip(self.templates, other.templates)))


def synthetic_templates(circuit: Circuit, dt: float = 1e-11, length: int = 200,
                        peak: float = 1e-3, tau_rise: float = 5e-11,
                        tau_fall: float = 2e-10, seed: int = 0,
                        spread: float = 0.5) -> GateTemplateSet:
    """Random but reproducible template library for a circuit.

    Each (k, j) gets a pulse whose peak and time constants are the nominal
    values scaled by independent factors in ``[1 - spread, 1 + spread]``, and
    a delay proportional to the gate's logic depth so downstream gates
    switch later.
    """
    if not 0 <= spread < 1:
        raise ValueError("spread must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    depth = _logic_depth(circuit)
    out = []
    t = np.arange(length) * dt
    for g in circuit.gates:
        n = transition_alphabet_size(g, cap=None)
        arr = np.empty((n, length))
        f = rng.uniform(1 - spread, 1 + spread, size=(n, 3))
        for j in range(n):
            tr = tau_rise * f[j, 1]
            tf = max(tau_fall * f[j, 2], 1.5 * tr)
            shift = np.clip(t - depth[g.id] * tau_rise, 0, None)
            arr[j] = peak * f[j, 0] * (np.exp(-shift / tf) - np.exp(-shift / tr))
        out.append(arr)
    return GateTemplateSet(tuple(out), dt)


def _logic_depth(circuit):
    depth = {}
    for k in circuit.topological_order:
        g = circuit.gates[k]
        d = [depth[circuit.driver(n)] + 1 for n in g.inputs if circuit.driver(n) is not None]
        depth[k] = max(d, default=0)
    return depth


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise, ``sigma`` amperes per sample."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma!r}")

    def stream(self, index: int) -> np.random.Generator:
        """Noise generator of trace ``index``; independent of scheduling."""
        return np.random.default_rng([self.seed, index])


@dataclass(frozen=True, eq=False)
class TraceSet:
    """M traces (rows of ``traces``) with their aligned primary-input pairs."""

    traces: np.ndarray
    pairs: np.ndarray
    dt: float
    mean_removed: bool = False

    def __post_init__(self):
        tr = _frozen(self.traces)
        pr = _frozen(self.pairs, dtype=np.int64)
        if tr.ndim != 2 or pr.shape != (tr.shape[0], 2):
            raise ValueError("traces must be (M, length) with pairs of shape (M, 2)")
        if tr.shape[0] < 1:
            raise ValueError("a trace set needs M >= 1 traces")
        if not np.all(np.isfinite(tr)):
            raise ValueError("trace samples must be finite")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"sample period must be positive, got {self.dt!r}")
        object.__setattr__(self, "traces", tr)
        object.__setattr__(self, "pairs", pr)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def m(self) -> int:
        return self.traces.shape[0]

    @property
    def length(self) -> int:
        return self.traces.shape[1]

    def __len__(self):
        return self.m

    def waveform(self, i: int) -> Waveform:
        return Waveform(self.traces[i], self.dt)

    def with_offset(self, offset) -> "TraceSet":
        """Add one fixed waveform to every trace (e.g. a supply baseline)."""
        offset = offset.samples if isinstance(offset, Waveform) else np.asarray(offset)
        return TraceSet(self.traces + offset, self.pairs, self.dt, self.mean_removed)

    def __eq__(self, other):
        if not isinstance(other, TraceSet):
            return NotImplemented
        return (self.dt == other.dt and self.mean_removed == other.mean_removed
                and np.array_equal(self.pairs, other.pairs)
                and np.array_equal(self.traces, other.traces))


def _check_templates(circuit, templates):
    templates.check(circuit)
    if templates.length < 1:
        raise ValueError("templates must have at least one sample")


def synthesize_traces(circuit: Circuit, templates: GateTemplateSet, pairs,
                      noise: NoiseSpec | None = None, gates: Sequence[int] | None = None
                      ) -> np.ndarray:
    """Noise-free superposition plus optional noise for many pairs at once.

    Returns an ``(M, length)`` array. ``gates`` limits the sum to a subset.
    Trace ``i`` draws its noise from ``noise.stream(i)``.
    """
    _check_templates(circuit, templates)
    arr = _pairs_array(circuit, pairs)
    gates = range(circuit.num_gates) if gates is None else sorted(set(gates))
    out = np.zeros((len(arr), templates.length))
    if len(gates):
        idx = local_transition_indices(circuit, arr, gates)
        for row, k in enumerate(gates):
            active = idx[row] >= 0
            if active.any():
                out[active] += templates.templates[k][idx[row][active]]
    if noise is not None and noise.sigma > 0:
        for i in range(len(arr)):
            out[i] += noise.stream(i).normal(0.0, noise.sigma, templates.length)
    return out


def synthesize_trace(circuit: Circuit, templates: GateTemplateSet, pair,
                     noise: NoiseSpec | None = None, index: int = 0) -> Waveform:
    """One trace: the templates of exactly the gates that switch, plus noise.

    ``index`` selects the trace's noise stream, so trace ``i`` of a set is
    reproduced by ``synthesize_trace(..., index=i)``.
    """
    prev, cur = pair
    p = (as_vector(circuit, prev), as_vector(circuit, cur))
    samples = synthesize_traces(circuit, templates, [p])[0]
    if noise is not None and noise.sigma > 0:
        samples = samples + noise.stream(index).normal(0.0, noise.sigma, templates.length)
    return Waveform(samples, templates.dt)


def random_pairs(width: int, m: int, seed: int) -> np.ndarray:
    """``m`` i.i.d. uniform (prev, cur) pairs of ``width``-bit vectors."""
    if m < 1:
        raise ValueError("M must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 1 << width, size=(m, 2), dtype=np.int64)


def generate_trace_set(circuit: Circuit, templates: GateTemplateSet, pairs=None, *,
                       m: int | None = None, seed: int | None = None,
                       noise: NoiseSpec | None = None) -> TraceSet:
    """Acquire a raw trace set.

    Either pass ``pairs`` explicitly (kept in order), or ``m`` and ``seed`` to
    draw uniform random pairs.
    """
    if pairs is None:
        if m is None or seed is None:
            raise ValueError("give either explicit pairs or both m and seed")
        pairs = random_pairs(circuit.width, m, seed)
    elif m is not None:
        raise ValueError("give either explicit pairs or m, not both")
    else:
        pairs = [(as_vector(circuit, a), as_vector(circuit, b)) for a, b in pairs]
        if not pairs:
            raise ValueError("M must be >= 1")
    traces = synthesize_traces(circuit, templates, pairs, noise)
    return TraceSet(traces, np.asarray(pairs, dtype=np.int64).reshape(-1, 2), templates.dt)


def subtract_ensemble_mean(traces: TraceSet) -> TraceSet:
    """Remove the per-sample mean taken across the M traces."""
    if traces.mean_removed:
        raise ValueError("ensemble mean has already been removed from this trace set")
    # shifted mean: exact when traces coincide, less cancellation otherwise
    ref = traces.traces[0]
    mean = ref + (traces.traces - ref).mean(axis=0)
    return TraceSet(traces.traces - mean, traces.pairs, traces.dt, mean_removed=True)
