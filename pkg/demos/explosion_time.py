"""
Finite-time blow-up of the noiseless equation
==============================================

With sigma = 0 the equation is ``x' = x^3`` and blows up at t = 0.5 from
x0 = 1. The detected explosion time approaches it as the step shrinks.
"""

from semidiscrete import IncrementStream, power_model, simulate_path

ode = power_model(sigma=0.0)
for delta in (0.1, 0.01, 0.001, 0.0001):
    traj = simulate_path(ode, "sd", 1.0, delta, int(2 / delta), IncrementStream(0, 0))
    print(f"delta={delta:g}: exploded at t={traj.termination_time:.4f} "
          f"(error {traj.termination_time - 0.5:+.4f})")

# With noise sigma = 1 the explosion time is random. Since 1/x is then a
# Brownian motion started at 1, P(explode by T) = 1 - erf(1/sqrt(2T)).
import math

from semidiscrete.montecarlo import EnsembleConfig, run_ensemble

cfg = EnsembleConfig(power_model(1.0), delta=0.01, n_steps=10_000, n_paths=1000, master_seed=5)
stats = run_ensemble(cfg)
print(f"sigma=1, T=100: exploded {stats.fraction_exploded:.3f}, "
      f"theory {1 - math.erf(1 / math.sqrt(200)):.3f}")
print("explosion times:", stats.explosion_times)
