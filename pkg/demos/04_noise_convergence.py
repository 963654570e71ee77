"""
Recovery error versus number of traces
======================================

With white noise the error of the signed average falls as 1/sqrt(M).
"""

import numpy as np

from sco import fixtures
from sco.powermodel import NoiseSpec, generate_trace_set, subtract_ensemble_mean, synthetic_templates
from sco.recovery import activation_sequence, estimate_response, reference_response

c = fixtures.independent()
tmpl = synthetic_templates(c, length=100, seed=11)
target = (0, 0)
truth = reference_response(c, tmpl, target).samples

ms = [500, 2_000, 8_000, 32_000]
errs = []
for m in ms:
    e = []
    for s in range(5):
        ts = subtract_ensemble_mean(generate_trace_set(c, tmpl, m=m, seed=s,
                                                       noise=NoiseSpec(1e-3, 100 + s)))
        est = estimate_response(ts, activation_sequence(c, ts, *target)).estimate.samples
        e.append(np.sqrt(np.mean((est - truth) ** 2)))
    errs.append(np.mean(e))
    print(f"M={m:>6}  rms error {errs[-1]:.3e}")

# slope of log error against log M, expect about -0.5
print("slope", round(np.polyfit(np.log(ms), np.log(errs), 1)[0], 3))
