"""
Decay of the p-th moment
=========================

In the stable regime the factor ``E(u)`` is at most 1 for every step size,
so ``E|y_n|^p`` cannot grow. Here sigma = 2 and p = 0.25.
"""

import numpy as np

from semidiscrete import power_model
from semidiscrete.analysis import moment_factor
from semidiscrete.montecarlo import EnsembleConfig, pth_moment_curve

model = power_model(2.0)
u = np.logspace(-3, 3, 7)
for delta in (0.01, 1.0, 100.0):
    print(f"delta={delta:g}: E(u) =", np.array2string(moment_factor(model, 0.25, delta, u), precision=3))

curve = pth_moment_curve(EnsembleConfig(model, delta=0.01, n_steps=10_000, n_paths=1000,
                                        master_seed=2, moment_p=0.25))
for k in range(0, len(curve.times), 2000):
    print(f"t={curve.times[k]:6.1f}  E|y|^p={curve.mean[k]:.4f} +/- {curve.stderr[k]:.4f}")
print("largest one-step rise in units of stderr:",
      float(np.max(np.diff(curve.mean) / curve.stderr[1:])))
