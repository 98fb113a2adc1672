"""Monte Carlo ensembles of independent paths.

Path ``i`` always draws from ``IncrementStream(master_seed, i)``. Paths are
split into fixed-size blocks that do not depend on the worker count; each
block is simulated in one vectorised batch and blocks are reduced in index
order, so results are bit-identical for any number of workers.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import DEFAULT_EPS_ZERO, select_p
from .errors import DegenerateDiffusion, DomainError, NoValidP, PathSimulationError
from .model import SdeModel, classify
from .noise import IncrementStream
from .schemes import (
    GuardConfig,
    SchemeKind,
    run_paths,
    trajectory_from_batch,
    write_trajectory_csv,
)

__all__ = [
    "EnsembleConfig",
    "EnsembleStats",
    "MomentCurve",
    "run_ensemble",
    "pth_moment_curve",
    "ensemble_report",
]

BLOCK_SIZE = 256


@dataclass(frozen=True)
class EnsembleConfig:
    model: SdeModel
    scheme: SchemeKind = SchemeKind.SEMI_DISCRETE
    y0: float = 1.0
    delta: float = 0.01
    n_steps: int = 10_000
    n_paths: int = 1000
    master_seed: int = 0
    guards: GuardConfig = field(default_factory=GuardConfig)
    eps_zero: float = DEFAULT_EPS_ZERO
    moment_p: Optional[float] = None
    record_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind.parse(self.scheme))
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if self.n_steps < 1:
            raise DomainError("n_steps must be >= 1")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if not self.y0 >= 0:
            raise DomainError("y0 must be nonnegative")
        if not self.eps_zero > self.guards.absorption_floor:
            raise DomainError("eps_zero must exceed the absorption floor")
        if self.moment_p is not None and not 0 < self.moment_p < 1:
            raise DomainError("moment_p must lie in (0, 1)")

    @property
    def horizon(self):
        return self.n_steps * self.delta

    def to_dict(self):
        return {
            "model": self.model.spec if self.model.spec is not None else self.model.label,
            "scheme": self.scheme.value,
            "y0": self.y0,
            "delta": self.delta,
            "n_steps": self.n_steps,
            "n_paths": self.n_paths,
            "master_seed": self.master_seed,
            "explosion_threshold": self.guards.explosion_threshold,
            "absorption_floor": self.guards.absorption_floor,
            "eps_zero": self.eps_zero,
            "moment_p": self.moment_p,
            "record_every": self.record_every,
        }


@dataclass
class MomentCurve:
    """Empirical ``E|y_t|^p`` over non-exploded paths at each recorded step."""

    p: float
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    count: np.ndarray
    n_exploded: int

    def to_dict(self):
        return {
            "p": self.p,
            "n_exploded_excluded": self.n_exploded,
            "points": [
                [t, _num(m), _num(s), int(c)]
                for t, m, s, c in zip(
                    self.times.tolist(), self.mean.tolist(), self.stderr.tolist(), self.count.tolist()
                )
            ],
        }


@dataclass
class EnsembleStats:
    n_paths: int
    fraction_converged: float
    fraction_exploded: float
    fraction_absorbed: float
    explosion_times: dict
    positivity_violations: int
    moment_curve: Optional[MomentCurve] = None
    final_states: Optional[np.ndarray] = field(default=None, repr=False)
    completed: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        return {
            "n_paths": self.n_paths,
            "fraction_converged": self.fraction_converged,
            "fraction_exploded": self.fraction_exploded,
            "fraction_absorbed": self.fraction_absorbed,
            "explosion_times": {k: _num(v) for k, v in self.explosion_times.items()},
            "positivity_violations": self.positivity_violations,
            "moment_curve": self.moment_curve.to_dict() if self.moment_curve else None,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _block_bounds(n_paths):
    return [(s, min(s + BLOCK_SIZE, n_paths)) for s in range(0, n_paths, BLOCK_SIZE)]


def _simulate_block(config, start, stop, keep_states):
    def go(lo, hi):
        streams = [IncrementStream(config.master_seed, i) for i in range(lo, hi)]
        return run_paths(
            config.model, config.scheme, config.y0, config.delta, config.n_steps,
            streams, config.guards, config.record_every,
            keep_states=keep_states, moment_p=config.moment_p,
        )

    try:
        return go(start, stop)
    except Exception:
        # find the first failing path so the error names it
        for i in range(start, stop):
            try:
                go(i, i + 1)
            except Exception as exc:
                raise PathSimulationError(i, exc) from exc
        raise


def _block_task(args):
    return _simulate_block(*args)


def _summary(times):
    if times.size == 0:
        return {"count": 0, "mean": None, "median": None, "min": None, "max": None}
    return {
        "count": int(times.size),
        "mean": float(np.mean(times)),
        "median": float(np.median(times)),
        "min": float(np.min(times)),
        "max": float(np.max(times)),
    }


def run_ensemble(config, workers=1, dump_dir=None):
    """Simulate ``config.n_paths`` paths and aggregate their statistics.

    Parameters
    ----------
    config : EnsembleConfig
    workers : int
        Process-pool size. Has no effect on the result.
    dump_dir : path, optional
        When given, every path is also written there as CSV.
    """
    keep = dump_dir is not None
    tasks = [(config, lo, hi, keep) for lo, hi in _block_bounds(config.n_paths)]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_block_task, tasks))
    else:
        results = [_block_task(t) for t in tasks]

    kind = np.concatenate([r.kind for r in results])
    term_step = np.concatenate([r.term_step for r in results])
    final = np.concatenate([r.final_state for r in results])
    negative = np.concatenate([r.went_negative for r in results])

    exploded = kind == 1
    absorbed = kind == 2
    completed = kind == 0
    converged = absorbed | (completed & (np.abs(final) <= config.eps_zero))
    n = config.n_paths

    curve = None
    if config.moment_p is not None:
        ks = results[0].record_k
        tot = np.zeros(len(ks))
        tot_sq = np.zeros(len(ks))
        cnt = np.zeros(len(ks), dtype=np.int64)
        for r in results:
            tot = tot + r.moment_sum
            tot_sq = tot_sq + r.moment_sumsq
            cnt = cnt + r.moment_count
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = tot / cnt
            var = np.where(cnt > 1, (tot_sq - tot * tot / cnt) / (cnt - 1), np.nan)
            se = np.sqrt(np.maximum(var, 0.0) / cnt)
        curve = MomentCurve(
            config.moment_p, ks * config.delta, mean, se, cnt, int(np.count_nonzero(exploded))
        )

    if keep:
        out = Path(dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        for (lo, hi), r in zip(_block_bounds(n), results):
            for j in range(hi - lo):
                meta = {
                    "seed": config.master_seed,
                    "path": lo + j,
                    "model": config.model.label,
                }
                traj = trajectory_from_batch(r, j, config.scheme, config.delta, meta)
                with open(out / f"path_{lo + j:06d}.csv", "w") as fh:
                    write_trajectory_csv(traj, fh)

    return EnsembleStats(
        n_paths=n,
        fraction_converged=float(np.count_nonzero(converged)) / n,
        fraction_exploded=float(np.count_nonzero(exploded)) / n,
        fraction_absorbed=float(np.count_nonzero(absorbed)) / n,
        explosion_times=_summary(term_step[exploded] * config.delta),
        positivity_violations=int(np.count_nonzero(negative)),
        moment_curve=curve,
        final_states=final,
        completed=completed,
    )


def pth_moment_curve(config, workers=1):
    """Empirical p-th moment curve for ``config.moment_p``."""
    if config.moment_p is None:
        raise DomainError("config.moment_p must be set")
    return run_ensemble(config, workers=workers).moment_curve


def ensemble_report(config, stats):
    """JSON-ready report: config echo, seed, statistics and diagnostics."""
    diagnostics = {"verdict": None, "selected_p": None, "median_decay_estimate": None}
    try:
        verdict = classify(config.model)
        diagnostics["verdict"] = verdict.to_dict()
        diagnostics["selected_p"] = select_p(verdict).p
    except (DegenerateDiffusion, NoValidP):
        pass
    if stats.final_states is not None:
        f = stats.final_states
        ok = stats.completed & (f > 0)
        if np.any(ok):
            rates = np.log(f[ok]) / config.horizon
            diagnostics["median_decay_estimate"] = float(np.median(rates))
    return {
        "seed": config.master_seed,
        "config": config.to_dict(),
        "stats": stats.to_dict(),
        "diagnostics": diagnostics,
    }
