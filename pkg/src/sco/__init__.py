"""Side-channel oscilloscope.

Synthesize supply-current traces of a combinational circuit from per-gate
step responses, then recover any single gate transition's response from the
aggregate traces by correlating against its signed activation sequence.

Modules
-------
netlist     parse, validate and serialize netlists
logicsim    logic evaluation, transition indices, activation signs
powermodel  templates, trace synthesis, ensemble-mean removal
recovery    correlation estimator, orthogonality and SNR diagnostics
refine      min-cut bisection, composite blocks, net probing, voltage
formats     CSV file formats
"""

from .logicsim import (TransitionPair, activation_indicator, activation_sign, evaluate,
                       local_transition, transition_index, transition_pair)
from .netlist import (Circuit, Gate, GateKind, parse_netlist, serialize_netlist,
                      transition_alphabet_size)
from .powermodel import (GateTemplateSet, NoiseSpec, TraceSet, Waveform, generate_trace_set,
                         make_template, subtract_ensemble_mean, synthesize_trace,
                         synthetic_templates)
from .recovery import (accumulate, activation_sequence, empirical_orthogonality,
                       estimate_response, reference_response, snr_report)
from .refine import (CompositeBlock, LoadModel, composite_transition, min_cut_bisect,
                     probe_net, voltage_from_current)

__version__ = "0.1.0"
