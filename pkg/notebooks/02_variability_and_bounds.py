"""
Variability of the distortion components
========================================

Mean-squared Lipschitz constants compare how strongly d and h vary
with the input, and the pair-difference estimator is checked against twice
the sample variance. The last cell runs the orthogonality bound on random
pairs.
"""

import numpy as np

from nldecomp import decompose, simulate
from nldecomp.indicators import dob_check, dob_ensemble, dob_extremal_pair
from nldecomp.lipschitz import holder_sanity, lipschitz_dominance, two_var_identity_check
from nldecomp.signals import generate_filtered_noise
from nldecomp.synth import make_system

x = generate_filtered_noise(3, 65536)
for kind in ("MemorylessPoly", "Hammerstein", "Wiener", "MemoryPolynomial"):
    res = decompose(x, simulate(make_system(kind, 3, 5, 3, 0.3), x), memory_depth=3)
    dom = lipschitz_dominance(res)
    print(f"{kind:17s} L_d = {dom.l_d:.4f}  L_h = {dom.l_h:.4f}  dominant = {dom.dominant}")

# E|f(x1) - f(x2)|^2 over independent pairs equals 2 Var f
d = res.on_support("d")
pair_mean, two_var, z = two_var_identity_check(d, seed=1)
print(f"\npair mean {pair_mean:.5f} vs 2 Var {two_var:.5f} (z = {z:.2f})")

# local ratio |d(x1) - d(x2)|^2 / |x1 - x2|^2 by distance bucket
rows, worst = holder_sanity(d, res.on_support("x"))
for r in rows[:3]:
    print(f"  |dx| in [{r['bucket_low']:.2f}, {r['bucket_high']:.2f}): ratio {r['ratio']:.3f}")

# the bound is tight on the constructed pair and never violated on random ones
a, b = dob_extremal_pair(8, seed=0, complex_valued=True)
print("\nextremal pair slack:", dob_check(a, b).slack_weak)
out = dob_ensemble(100_000, 8, seed=0)
print("random pairs: min slack", out["min_slack_weak"], "violations", out["violations_weak"])
