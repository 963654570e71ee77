"""
Locating a net by recursive bisection
=====================================

probe_net splits the circuit by min cut, recovers the response of the
half that drives the net, and recurses until one gate is left. The leaf
current is then integrated into a load capacitance.
"""

import numpy as np

from sco import fixtures
from sco.powermodel import generate_trace_set, synthetic_templates
from sco.refine import LoadModel, min_cut_bisect, probe_net, voltage_from_current

c = fixtures.c17()
part = min_cut_bisect(c, seed=0)
print("bisection", sorted(part.side_a), sorted(part.side_b), "cut", sorted(part.cut_nets))

tmpl = synthetic_templates(c, length=100, seed=4)
raw = generate_trace_set(c, tmpl, m=20_000, seed=3)

res = probe_net(c, tmpl, raw, "N22", 0)
for node in res.path:
    print(f"level {node.level}: gates {sorted(node.block.gates)}  "
          f"inputs {node.block.boundary_inputs}  SNR {node.snr_db:.1f} dB")
print("cut sizes per level", res.cut_sizes)
print("leaf gate", res.leaf.gate, "SNR", round(res.leaf.snr_db, 1), "dB")

v = voltage_from_current(res.leaf.estimate, LoadModel(capacitance=10e-15, v0=0.0))
print("final node voltage swing %.3f V" % v.samples[-1])
print("peak |dV/dt| at sample", int(np.argmax(np.abs(np.diff(v.samples)))))

# the leaf shares every transition with its neighbours' activity, so its SNR
# stays low; the root block (whole circuit) is recovered almost exactly
