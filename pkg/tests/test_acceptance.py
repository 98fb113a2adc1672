"""Exit criteria for the package, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest summary.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from semidiscrete import (
    GuardConfig,
    IncrementStream,
    Termination,
    classify,
    constant_model,
    power_model,
    simulate_path,
)
from semidiscrete.analysis import moment_factor, moment_factor_star, select_p
from semidiscrete.montecarlo import EnsembleConfig, pth_moment_curve, run_ensemble
from semidiscrete.schemes import SchemeKind, run_paths, trajectory_from_batch

N_PATHS = 1000
HORIZON = 100.0
EPS_ZERO = 1e-6


# 1 -------------------------------------------------------------------------


def test_explosion_time_reproduction(criterion):
    # blow-up time of dx = x^3 dt from x0 = 1, by quadrature
    tau, _ = integrate.quad(lambda u: u**-3, 1.0, np.inf)
    ode = power_model(0.0)
    start = time.perf_counter()
    fine = simulate_path(ode, "sd", 1.0, 0.001, 5_000, IncrementStream(0, 0))
    coarse = simulate_path(ode, "sd", 1.0, 0.01, 500, IncrementStream(0, 0))
    elapsed = time.perf_counter() - start
    assert fine.termination is Termination.EXPLODED
    assert coarse.termination is Termination.EXPLODED
    err_fine = abs(fine.termination_time - tau)
    err_coarse = abs(coarse.termination_time - tau)
    ok = err_fine <= 0.05 and err_fine < err_coarse and elapsed < 1.0
    criterion(
        "1 explosion time",
        ok,
        f"tau={tau:.6f} fine={fine.termination_time:.4f} coarse={coarse.termination_time:.4f} "
        f"({elapsed:.3f}s)",
    )
    assert err_fine <= 0.05
    assert err_fine < err_coarse
    assert elapsed < 1.0


# 2 -------------------------------------------------------------------------


@pytest.mark.parametrize("delta", [0.01, 0.1, 1.0])
@pytest.mark.parametrize("sigma", [2.0, 3.0])
def test_stability_regime(sigma, delta, criterion):
    cfg = EnsembleConfig(
        power_model(sigma),
        delta=delta,
        n_steps=int(round(HORIZON / delta)),
        n_paths=N_PATHS,
        master_seed=1,
        eps_zero=EPS_ZERO,
    )
    stats = run_ensemble(cfg)
    ok = stats.fraction_converged >= 0.99 and stats.fraction_exploded == 0.0
    criterion(
        f"2 stability sigma={sigma:g} delta={delta:g}",
        ok,
        f"converged={stats.fraction_converged:.3f} exploded={stats.fraction_exploded:.3f} "
        f"median final={np.median(stats.final_states):.3g}",
    )
    assert stats.fraction_exploded == 0.0
    assert stats.fraction_converged >= 0.99


# 3 -------------------------------------------------------------------------

# Surviving fraction for the SDE is erf(1/sqrt(2T)) (1/x is a Brownian motion
# from 1); at T = 4e4 that is 0.004, far enough below the 0.01 allowance.
UNSTABLE_HORIZON = 40_000.0


@pytest.mark.slow
def test_instability_regime(criterion):
    cfg = EnsembleConfig(
        power_model(1.0),
        delta=0.01,
        n_steps=int(round(UNSTABLE_HORIZON / 0.01)),
        n_paths=N_PATHS,
        master_seed=1,
        eps_zero=EPS_ZERO,
        guards=GuardConfig(explosion_threshold=1e8),
    )
    stats = run_ensemble(cfg)
    ok = stats.fraction_converged <= 0.01 and stats.fraction_exploded >= 0.99
    criterion(
        "3 instability sigma=1",
        ok,
        f"converged={stats.fraction_converged:.3f} exploded={stats.fraction_exploded:.3f} "
        f"(T={UNSTABLE_HORIZON:g})",
    )
    assert stats.fraction_converged <= 0.01
    assert stats.fraction_exploded >= 0.99


# 4 -------------------------------------------------------------------------


def _fuzz_batches(n_triples=10_000, per_batch=10, seed=20240601):
    """Random (model, seed, delta) triples grouped by model and step size."""
    rng = np.random.default_rng(seed)
    for _ in range(n_triples // per_batch):
        if rng.random() < 0.8:
            model = power_model(rng.uniform(0.0, 5.0), rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0))
        else:
            model = constant_model(rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0))
        delta = float(10 ** rng.uniform(-3, 1))
        y0 = float(10 ** rng.uniform(-3, 1))
        seeds = rng.integers(0, 2**63, size=per_batch)
        yield model, delta, y0, [IncrementStream(int(s), 0) for s in seeds]


def test_positivity_by_construction(criterion):
    n_triples = 0
    nonpositive = 0
    for model, delta, y0, streams in _fuzz_batches():
        res = run_paths(model, "sd", y0, delta, 100, streams)
        n_triples += len(streams)
        for i in range(len(streams)):
            traj = trajectory_from_batch(res, i, "sd", delta)
            states = traj.states
            if traj.termination is Termination.ABSORBED:
                # the absorbing state itself is the underflow
                states = states[:-1]
            nonpositive += int(np.count_nonzero(~(states > 0)))

    em = run_ensemble(EnsembleConfig(
        power_model(2.0), scheme=SchemeKind.EULER_MARUYAMA, delta=0.1,
        n_steps=int(round(HORIZON / 0.1)), n_paths=N_PATHS, master_seed=1,
    ))
    ok = n_triples == 10_000 and nonpositive == 0 and em.positivity_violations >= 1
    criterion(
        "4 positivity",
        ok,
        f"sd triples={n_triples} nonpositive states={nonpositive}; "
        f"em paths with negative states={em.positivity_violations}",
    )
    assert n_triples == 10_000
    assert nonpositive == 0
    assert em.positivity_violations >= 1


# 5 -------------------------------------------------------------------------


@pytest.mark.parametrize("alpha, beta", [(0.0, 0.5), (0.3, 0.8), (2.0, 1.0), (0.1, 2.5)])
def test_frozen_coefficient_exactness(alpha, beta, criterion):
    delta, n = 0.01, 1000
    model = constant_model(alpha, beta)
    traj = simulate_path(model, "sd", 1.0, delta, n, IncrementStream(5, 0), GuardConfig(1e300, 1e-300))
    dW = IncrementStream(5, 0).increments(delta, n)
    w = np.concatenate([[0.0], np.cumsum(dW)])
    t = np.arange(n + 1) * delta
    exact = np.exp((alpha - beta**2 / 2) * t + beta * w)
    rel = float(np.max(np.abs(traj.states - exact) / exact))
    criterion(f"5 GBM exactness alpha={alpha:g} beta={beta:g}", rel <= 1e-10, f"max rel err={rel:.2e}")
    assert traj.termination is Termination.COMPLETED
    assert rel <= 1e-10


# 6 -------------------------------------------------------------------------

STABLE_POWER_MODELS = [
    (1.5, 2.0, 1.0), (2.0, 2.0, 1.0), (3.0, 2.0, 1.0), (10.0, 2.0, 1.0),
    (2.0, 3.0, 1.5), (1.8, 1.0, 0.5), (4.0, 4.0, 2.0),
]


def test_moment_factor_contraction(criterion):
    u = np.logspace(-6, 6, 1000)
    worst = 0.0
    identity_err = 0.0
    for sigma, pa, pb in STABLE_POWER_MODELS:
        model = power_model(sigma, pa, pb)
        verdict = classify(model)
        p = select_p(verdict).p
        for delta in (0.01, 1.0, 100.0):
            e = moment_factor(model, p, delta, u)
            worst = max(worst, float(np.max(e)))
            assert np.all(e <= 1.0), (sigma, pa, pb, delta)

            es = moment_factor_star(model, p, delta, u)
            b2 = (sigma * u**pb) ** 2
            half = p * b2 / 2 * delta
            r = 2 * u**pa / b2
            e1, e2 = half * (r - 1 + p), half * (1 - r + p)
            finite = (np.abs(e1) < 700) & (np.abs(e2) < 700)
            lhs = e[finite] * es[finite]
            rhs = np.exp(p * p * b2[finite] * delta)
            # exp amplifies an absolute exponent error into relative error
            tol = 8 * np.finfo(float).eps * (1 + np.abs(e1[finite]) + np.abs(e2[finite]))
            err = np.abs(lhs - rhs) / rhs
            identity_err = max(identity_err, float(np.max(err / tol)))
            assert np.all(err <= tol)
    criterion(
        "6 moment-factor contraction",
        worst <= 1.0 and identity_err <= 1.0,
        f"max factor={worst!r}; identity err/roundoff bound={identity_err:.3f}",
    )


# 7 -------------------------------------------------------------------------


def test_moment_monotonicity(criterion):
    cfg = EnsembleConfig(
        power_model(2.0), delta=0.01, n_steps=int(round(HORIZON / 0.01)),
        n_paths=N_PATHS, master_seed=1, moment_p=0.25,
    )
    curve = pth_moment_curve(cfg)
    rise = np.diff(curve.mean)
    slack = 3 * curve.stderr[1:]
    worst = float(np.max(rise / slack))
    ok = bool(np.all(rise <= slack))
    criterion(
        "7 moment monotonicity",
        ok,
        f"{len(rise)} steps; max rise / 3 stderr = {worst:.3f}; "
        f"E|y|^p {curve.mean[0]:.3f} -> {curve.mean[-1]:.3f}",
    )
    assert ok


# 8 -------------------------------------------------------------------------


def test_reproducibility_across_workers(criterion):
    cfg = EnsembleConfig(
        power_model(2.0), delta=0.01, n_steps=2000, n_paths=N_PATHS,
        master_seed=8, moment_p=0.25,
    )
    one = run_ensemble(cfg, workers=1).to_json().encode()
    eight = run_ensemble(cfg, workers=8).to_json().encode()
    criterion("8 reproducibility", one == eight, f"{len(one)} bytes, identical={one == eight}")
    assert one == eight
