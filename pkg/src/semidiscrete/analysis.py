"""Moment factors and per-trajectory diagnostics.

For ``p > 0`` the semi-discrete update factorises as
``|y_{n+1}|^p = E(y_n) * xi_{n+1}`` where ``xi`` has conditional mean
``|y_n|^p`` and

    E(u)  = exp{ p b(u)^2 / 2 * ( 2a(u)/b(u)^2 - 1 + p) * delta }
    E*(u) = exp{ p b(u)^2 / 2 * (-2a(u)/b(u)^2 + 1 + p) * delta }

is the analogous factor for ``|y|^{-p}``. ``E <= 1`` everywhere makes
``|y_n|^p`` a supermartingale; ``E* <= 1`` does the same for ``|y_n|^{-p}``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoValidP, UndefinedEstimate
from .model import VerdictKind, eval_diffusion, ratio
from .schemes import Termination

__all__ = [
    "Direction",
    "MomentFactorSpec",
    "moment_factor",
    "moment_factor_star",
    "select_p",
    "detect_explosion",
    "decay_estimate",
    "converged_to_zero",
]

DEFAULT_EPS_ZERO = 1e-6


class Direction(enum.Enum):
    STABILITY = "Stability"
    INSTABILITY = "Instability"


@dataclass(frozen=True)
class MomentFactorSpec:
    p: float
    direction: Direction


def _factor(model, p, delta, u, sign):
    if not p > 0:
        raise DomainError("p must be positive")
    if not delta > 0:
        raise DomainError("delta must be positive")
    r = ratio(model, u)
    b = np.asarray(eval_diffusion(model, u), dtype=np.float64)
    with np.errstate(over="ignore"):
        out = np.exp(p * (b * b) / 2.0 * (sign * r - sign + p) * delta)
    return float(out) if out.ndim == 0 else out


def moment_factor(model, p, delta, u):
    """Per-step growth factor of ``|y|^p`` at state ``u``."""
    return _factor(model, p, delta, u, 1.0)


def moment_factor_star(model, p, delta, u):
    """Per-step growth factor of ``|y|^{-p}`` at state ``u``."""
    return _factor(model, p, delta, u, -1.0)


def select_p(verdict):
    """Midpoint of the admissible exponent interval for ``verdict``.

    ``(1 - beta)/2`` when stable; ``min((gamma - 1)/2, 0.99)`` when unstable.
    """
    if verdict.kind is VerdictKind.AS_STABLE:
        return MomentFactorSpec((1.0 - verdict.beta) / 2.0, Direction.STABILITY)
    if verdict.kind is VerdictKind.AS_UNSTABLE:
        return MomentFactorSpec(min((verdict.gamma - 1.0) / 2.0, 0.99), Direction.INSTABILITY)
    raise NoValidP("no admissible p for an indeterminate verdict")


def detect_explosion(traj):
    if traj.termination is Termination.EXPLODED:
        return traj.termination_time
    return None


def decay_estimate(traj, method="final"):
    """Empirical exponential rate ``log(y)/t`` of a completed positive path.

    ``method="final"`` uses the last recorded point; ``"regression"`` fits a
    least-squares slope of ``log y`` against ``t`` over the last half of the
    path.
    """
    if traj.termination is not Termination.COMPLETED:
        raise UndefinedEstimate(f"path terminated as {traj.termination.value}")
    if len(traj.states) < 2:
        raise UndefinedEstimate("need at least two recorded points")
    if np.any(traj.states <= 0):
        raise UndefinedEstimate("path has nonpositive states")
    if method == "final":
        return math.log(traj.states[-1]) / traj.times[-1]
    if method == "regression":
        half = len(traj.times) // 2
        t = traj.times[half:]
        if len(t) < 2:
            raise UndefinedEstimate("too few points for a regression")
        slope, _ = np.polyfit(t, np.log(traj.states[half:]), 1)
        return float(slope)
    raise ValueError(f"unknown method {method!r}")


def converged_to_zero(traj, eps=DEFAULT_EPS_ZERO):
    """Finite-horizon surrogate for ``y_n -> 0``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    if traj.termination is Termination.ABSORBED:
        return True
    return traj.termination is Termination.COMPLETED and abs(traj.states[-1]) <= eps
