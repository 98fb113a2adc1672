"""
Stable and unstable regimes of the cubic test equation
=======================================================

For ``dx = x^3 dt + sigma x^2 dW`` the ratio ``2a/b^2`` equals ``2/sigma^2``
everywhere, so the classifier reads the verdict straight off sigma.
"""

import numpy as np

from semidiscrete import classify, expression_model, power_model
from semidiscrete.analysis import select_p
from semidiscrete.montecarlo import EnsembleConfig, run_ensemble

for sigma in (1.0, 2.0, 3.0):
    verdict = classify(power_model(sigma))
    print(f"sigma={sigma:g}: {verdict.kind.value}, beta={verdict.beta:.3g}, "
          f"p={select_p(verdict).p:.3g}")

# Models without closed forms are classified from a grid estimate.
print(classify(expression_model("u^2", "2*u^(1.1)")).to_dict())

# The ensemble view. Stable paths all shrink, but slowly: the typical state at
# T = 100 is around 1e-2, not 1e-6. Unstable paths mostly blow up.
for sigma in (2.0, 1.0):
    cfg = EnsembleConfig(power_model(sigma), delta=0.01, n_steps=10_000,
                         n_paths=500, master_seed=3)
    stats = run_ensemble(cfg)
    done = stats.final_states[stats.completed]
    median = float(np.median(done)) if done.size else float("nan")
    print(f"sigma={sigma:g}: exploded={stats.fraction_exploded:.3f} "
          f"converged(1e-6)={stats.fraction_converged:.3f} median final={median:.3g}")
