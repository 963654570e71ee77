"""
How orthogonal are activation sequences?
========================================

Self products are exactly M. Cross products between unrelated gates do
not go to zero, because a sign is -1 most of the time. Centring the
sequences (which ensemble-mean removal does implicitly) restores the
1/sqrt(M) decay.
"""

import numpy as np

from sco import fixtures
from sco.powermodel import random_pairs
from sco.recovery import empirical_orthogonality

c = fixtures.independent()      # INV, BUF, NAND2, XOR2 on separate inputs
a, b = (0, 0), (2, 3)

for m in (100, 1_000, 10_000, 100_000):
    pairs = random_pairs(c.width, m, seed=m)
    self_inner, _ = empirical_orthogonality(c, pairs, a, a)
    _, raw = empirical_orthogonality(c, pairs, a, b)
    _, cen = empirical_orthogonality(c, pairs, a, b, centered=True)
    print(f"M={m:>6}  self={self_inner:>6}  raw={raw:+.4f}  centered={cen:+.5f}  "
          f"5/sqrt(M)={5 / np.sqrt(m):.4f}")

# raw value tends to (2 p_a - 1)(2 p_b - 1)
print("limit", (2 / 4 - 1) * (2 / 16 - 1))
