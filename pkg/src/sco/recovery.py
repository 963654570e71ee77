"""Recover a single gate transition's current response from aggregate traces.

The trace ensemble (mean removed) is weighted by the target's signed
activation sequence and summed; scaling the sum by ``2/M`` gives the
estimate. Whatever other activity correlates with the target survives as
residual noise, which :func:`snr_report` quantifies against a reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logicsim import _pairs_array, activation_signs
from .netlist import Circuit, transition_alphabet_size
from .powermodel import GateTemplateSet, TraceSet, Waveform, synthesize_traces

__all__ = [
    "SNR_CAP_DB",
    "ActivationSequence",
    "RecoveredResponse",
    "TransitionOutOfRange",
    "accumulate",
    "activation_sequence",
    "empirical_orthogonality",
    "estimate_response",
    "reference_response",
    "snr_report",
]

SNR_CAP_DB = 300.0


class TransitionOutOfRange(ValueError):
    def __init__(self, gate: int, j: int, n: int):
        super().__init__(f"transition index {j} ≥ N_k={n} for gate {gate}")
        self.gate = gate
        self.j = j
        self.n = n


@dataclass(frozen=True, eq=False)
class ActivationSequence:
    gate: int
    index: int
    signs: np.ndarray

    def __post_init__(self):
        s = np.array(self.signs, dtype=np.int8)
        if s.ndim != 1 or not np.all((s == 1) | (s == -1)):
            raise ValueError("activation signs must be a 1-d sequence of +1/-1")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    def __len__(self):
        return len(self.signs)

    @property
    def positives(self) -> int:
        return int(np.count_nonzero(self.signs == 1))

    def __neg__(self):
        return ActivationSequence(self.gate, self.index, -self.signs)


@dataclass(frozen=True)
class RecoveredResponse:
    estimate: Waveform
    gate: int
    index: int
    m: int
    positives: int
    snr_db: float | None = None


def _check_target(circuit, gate, j):
    g = circuit.gate(gate)
    n = transition_alphabet_size(g, cap=None)
    if not 0 <= j < n:
        raise TransitionOutOfRange(gate, j, n)


def activation_sequence(circuit: Circuit, traces: TraceSet | np.ndarray, gate: int,
                        j: int) -> ActivationSequence:
    """Signs T(gate, j) for every pair of ``traces`` (a TraceSet or a pair array)."""
    _check_target(circuit, gate, j)
    pairs = traces.pairs if isinstance(traces, TraceSet) else traces
    return ActivationSequence(gate, j, activation_signs(circuit, pairs, gate, j))


def _check_inputs(traces, signs):
    if not traces.mean_removed:
        raise ValueError("trace set must have its ensemble mean removed before accumulation")
    if len(signs) != traces.m:
        raise ValueError(f"{len(signs)} activation signs for {traces.m} traces")


def accumulate(traces: TraceSet, signs: ActivationSequence) -> Waveform:
    """Signed sum of the traces, added in trace-index order."""
    _check_inputs(traces, signs)
    # axis-0 reduction of a C-ordered array adds rows sequentially
    acc = np.add.reduce(traces.traces * signs.signs[:, None].astype(np.float64), axis=0)
    return Waveform(acc, traces.dt)


def estimate_response(traces: TraceSet, signs: ActivationSequence,
                      truth: Waveform | None = None) -> RecoveredResponse:
    """Scale the accumulation by 2/M.

    The result is the mean-removed response: absolute DC levels cannot be
    recovered after ensemble-mean subtraction. When ``truth`` is given the SNR
    against it is attached.
    """
    acc = accumulate(traces, signs)
    est = Waveform(acc.samples * (2.0 / traces.m), traces.dt)
    snr = snr_report(est, truth) if truth is not None else None
    return RecoveredResponse(est, signs.gate, signs.index, traces.m, signs.positives, snr)


def empirical_orthogonality(circuit: Circuit, pairs, a: tuple[int, int],
                            b: tuple[int, int], centered: bool = False):
    """Inner product of two activation sequences over ``pairs``, raw and divided by M.

    Signs are -1 far more often than +1 (a gate rarely hits one particular
    transition), so for independent targets the raw normalized product tends
    to ``(2 p_a - 1)(2 p_b - 1)``, not 0. ``centered=True`` subtracts each
    sequence's mean first, which is the correlation the estimator actually
    sees after ensemble-mean removal; it returns ``(float, float)``.
    """
    _check_target(circuit, *a)
    _check_target(circuit, *b)
    arr = _pairs_array(circuit, pairs)
    if len(arr) == 0:
        raise ValueError("need at least one pair")
    ta = activation_signs(circuit, arr, *a).astype(np.int64)
    tb = activation_signs(circuit, arr, *b).astype(np.int64)
    if centered:
        inner_c = float((ta - ta.mean()) @ (tb - tb.mean()))
        return inner_c, inner_c / len(arr)
    inner = int(ta @ tb)
    return inner, inner / len(arr)


def reference_response(circuit: Circuit, templates: GateTemplateSet, target: tuple[int, int],
                       pairs=None, gates=None, signs: np.ndarray | None = None) -> Waveform:
    """Noise- and interference-free recovery of ``target``.

    Runs the estimator on traces synthesized from the templates of ``gates``
    only (default: the target gate alone). With ``pairs=None`` every ordered
    pair of primary-input vectors is used once, which is the large-M limit for
    uniformly random pairs. ``signs`` overrides the activation sequence, for
    composite targets.
    """
    gate, j = target
    if signs is None:
        _check_target(circuit, gate, j)
    if pairs is None:
        if circuit.width > 10:
            raise ValueError("exhaustive pair enumeration limited to 10 primary inputs")
        v = np.arange(1 << circuit.width, dtype=np.int64)
        pairs = np.stack(np.meshgrid(v, v, indexing="ij"), axis=-1).reshape(-1, 2)
    arr = _pairs_array(circuit, pairs)
    raw = synthesize_traces(circuit, templates, arr, gates=[gate] if gates is None else gates)
    ts = TraceSet(raw - raw.mean(axis=0), arr, templates.dt, mean_removed=True)
    if signs is None:
        seq = activation_sequence(circuit, arr, gate, j)
    else:
        seq = ActivationSequence(gate, j, signs)
    return estimate_response(ts, seq).estimate


def snr_report(recovered: RecoveredResponse | Waveform, truth: Waveform) -> float:
    """``10 log10(|truth|^2 / |estimate - truth|^2)`` in dB, capped at ``SNR_CAP_DB``."""
    est = recovered.estimate if isinstance(recovered, RecoveredResponse) else recovered
    if not est.same_grid(truth):
        raise ValueError("estimate and truth are on different sample grids")
    signal = float(np.dot(truth.samples, truth.samples))
    if signal == 0.0:
        raise ValueError("ground-truth waveform has zero energy")
    resid = est.samples - truth.samples
    noise = float(np.dot(resid, resid))
    if noise == 0.0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 10.0 * math.log10(signal / noise))
