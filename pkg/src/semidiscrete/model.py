"""Scalar SDE models ``dx = x a(x) dt + x b(x) dW`` and their stability class.

A model is the pair of nonnegative factors ``a`` and ``b``. Whether the zero
equilibrium is almost surely stable or unstable under the semi-discrete
scheme is decided by the ratio ``2 a(u) / b(u)**2``: its supremum over
``u != 0`` (``beta``) and its lower limit as ``u -> 0`` (``gamma``).

Local Lipschitz continuity of ``a`` and ``b`` is required for the SDE to be
well posed. It is not checked here and remains the caller's obligation.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CoefficientNegative, DegenerateDiffusion, DomainError, ExpressionError
from .expr import Expression

__all__ = [
    "SdeModel",
    "PowerFactor",
    "GridSpec",
    "VerdictKind",
    "Evidence",
    "StabilityVerdict",
    "power_model",
    "constant_model",
    "expression_model",
    "model_from_spec",
    "eval_drift",
    "eval_diffusion",
    "ratio",
    "classify",
]


@dataclass(frozen=True)
class PowerFactor:
    """The factor ``u -> scale * u**exponent`` (picklable, vectorised)."""

    scale: float
    exponent: float

    def __call__(self, u):
        out = self.scale * np.power(np.asarray(u, dtype=np.float64), self.exponent)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SdeModel:
    """Coefficient pair of ``dx = x a(x) dt + x b(x) dW``.

    Parameters
    ----------
    drift_factor, diffusion_factor : callable
        ``a`` and ``b``. Both must accept scalars and float arrays.
    analytic_beta, analytic_gamma : float, optional
        Closed-form ``sup 2a/b^2`` and ``liminf_{u->0} 2a/b^2`` when known.
        ``math.inf`` is allowed.
    label : str
        Human-readable name.
    spec : dict, optional
        Serialisable description the model was built from, used by the
        config layer. Not part of equality.
    """

    drift_factor: Callable
    diffusion_factor: Callable
    analytic_beta: Optional[float] = None
    analytic_gamma: Optional[float] = None
    label: str = "model"
    spec: Optional[dict] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.analytic_beta is None:
            return
        u = np.logspace(-6, 6, 65)
        with np.errstate(all="ignore"):
            a = np.asarray(self.drift_factor(u), dtype=np.float64)
            b = np.asarray(self.diffusion_factor(u), dtype=np.float64)
            r = 2.0 * a / (b * b)
        # subnormal b^2 loses precision; skip those samples
        ok = np.isfinite(r) & (b * b >= np.finfo(np.float64).tiny)
        bound = self.analytic_beta * (1 + 1e-12) + 1e-300
        if np.any(r[ok] > bound):
            worst = u[ok][np.argmax(r[ok])]
            raise DomainError(
                f"analytic_beta={self.analytic_beta} is exceeded by the ratio "
                f"at u={worst:g}"
            )


def _ratio_level(alpha, beta):
    # 2 alpha / beta^2, saturating to inf when beta^2 underflows
    sq = beta * beta
    if sq == 0.0:
        return math.inf if alpha > 0 else 0.0
    return 2.0 * alpha / sq if alpha > 0 else 0.0


def power_model(sigma, drift_exp=2.0, diff_exp=1.0):
    """``a(u) = u**drift_exp``, ``b(u) = sigma * u**diff_exp``.

    The defaults give the cubic-drift, quadratic-noise test equation for
    which ``2a/b^2 = 2/sigma^2`` at every ``u``.
    """
    sigma = float(sigma)
    drift_exp = float(drift_exp)
    diff_exp = float(diff_exp)
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if drift_exp <= 0 or diff_exp <= 0:
        raise DomainError("power exponents must be positive")
    beta = gamma = None
    if sigma > 0:
        level = _ratio_level(1.0, sigma)
        gap = drift_exp - 2.0 * diff_exp
        if gap == 0:
            beta = gamma = level
        elif gap > 0:
            beta, gamma = math.inf, 0.0
        else:
            beta, gamma = math.inf, math.inf
    return SdeModel(
        PowerFactor(1.0, drift_exp),
        PowerFactor(sigma, diff_exp),
        analytic_beta=beta,
        analytic_gamma=gamma,
        label=f"power(sigma={sigma:g}, drift_exp={drift_exp:g}, diff_exp={diff_exp:g})",
        spec={"family": "power", "sigma": sigma, "drift_exp": drift_exp, "diff_exp": diff_exp},
    )


def constant_model(alpha, beta):
    """Frozen coefficients ``a = alpha``, ``b = beta``: geometric Brownian motion."""
    alpha = float(alpha)
    beta = float(beta)
    if alpha < 0 or beta < 0:
        raise DomainError("constant coefficients must be nonnegative")
    level = _ratio_level(alpha, beta) if beta > 0 else None
    return SdeModel(
        PowerFactor(alpha, 0.0),
        PowerFactor(beta, 0.0),
        analytic_beta=level,
        analytic_gamma=level,
        label=f"constant(alpha={alpha:g}, beta={beta:g})",
        spec={"family": "constant", "alpha": alpha, "beta": beta},
    )


def expression_model(a, b, label=None):
    """Model from two expressions in the coefficient grammar, e.g. ``"u^2"``."""
    fa, fb = Expression(a), Expression(b)
    return SdeModel(
        fa,
        fb,
        label=label or f"a={fa.source}, b={fb.source}",
        spec={"a": fa.source, "b": fb.source},
    )


def model_from_spec(spec):
    """Build a model from its config-table form.

    ``{"family": "power", "sigma": 2.0, "drift_exp": 2, "diff_exp": 1}``,
    ``{"family": "constant", "alpha": .., "beta": ..}`` or
    ``{"a": "u^2", "b": "2*u"}``.
    """
    spec = dict(spec)
    if "a" in spec or "b" in spec:
        extra = set(spec) - {"a", "b", "label"}
        if extra or "a" not in spec or "b" not in spec:
            raise ExpressionError("expression models need exactly the keys 'a' and 'b'")
        return expression_model(spec["a"], spec["b"], spec.get("label"))
    family = spec.pop("family", "power")
    if family == "power":
        allowed = {"sigma", "drift_exp", "diff_exp"}
        if set(spec) - allowed:
            raise DomainError(f"unknown power-model keys: {sorted(set(spec) - allowed)}")
        if "sigma" not in spec:
            raise DomainError("power model needs 'sigma'")
        return power_model(**spec)
    if family == "constant":
        if set(spec) != {"alpha", "beta"}:
            raise DomainError("constant model needs exactly 'alpha' and 'beta'")
        return constant_model(**spec)
    raise DomainError(f"unknown model family {family!r}")


def _nonneg(which, values, u):
    values = np.asarray(values, dtype=np.float64)
    bad = values < 0
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        raise CoefficientNegative(
            which, float(np.atleast_1d(u)[idx]), float(np.atleast_1d(values)[idx])
        )


def _check_state(u):
    arr = np.asarray(u, dtype=np.float64)
    if np.any(arr < 0):
        raise DomainError("coefficients are only defined for u >= 0")
    return arr


def eval_drift(model, u):
    """``a(u)`` with a nonnegativity guard. Works on scalars and arrays."""
    arr = _check_state(u)
    out = model.drift_factor(arr)
    _nonneg("drift", out, arr)
    return out


def eval_diffusion(model, u):
    """``b(u)`` with a nonnegativity guard. Works on scalars and arrays."""
    arr = _check_state(u)
    out = model.diffusion_factor(arr)
    _nonneg("diffusion", out, arr)
    return out


def ratio(model, u):
    """Drift-to-noise balance ``2 a(u) / b(u)**2`` for ``u > 0``.

    Raises
    ------
    DomainError
        If any ``u <= 0``.
    DegenerateDiffusion
        If ``b(u) == 0`` at some ``u > 0``.
    """
    arr = np.asarray(u, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise DomainError("ratio is only defined for u > 0")
    a = eval_drift(model, arr)
    b = np.asarray(eval_diffusion(model, arr), dtype=np.float64)
    if np.any(b == 0):
        where = float(np.atleast_1d(arr)[np.flatnonzero(np.atleast_1d(b == 0))[0]])
        raise DegenerateDiffusion(f"b(u) = 0 at u={where!r} ({model.label})")
    with np.errstate(over="ignore", invalid="ignore"):
        out = 2.0 * np.asarray(a) / (b * b)
    return float(out) if out.ndim == 0 else out


class VerdictKind(enum.Enum):
    AS_STABLE = "AsStable"
    AS_UNSTABLE = "AsUnstable"
    INDETERMINATE = "Indeterminate"


class Evidence(enum.Enum):
    ANALYTIC = "Analytic"
    GRID_ESTIMATE = "GridEstimate"


@dataclass(frozen=True)
class GridSpec:
    """Sampling used when ``beta``/``gamma`` must be estimated numerically.

    ``beta`` is the max of the ratio over ``n_beta`` log-spaced points in
    ``[u_min, u_max]``; ``gamma`` the min over ``n_gamma`` log-spaced points
    in ``[u_floor, u_near]``. A definite verdict from estimates needs the
    estimate to clear 1 by ``margin``.
    """

    u_min: float = 1e-8
    u_max: float = 1e8
    n_beta: int = 4096
    u_floor: float = 1e-12
    u_near: float = 1e-3
    n_gamma: int = 1024
    margin: float = 0.05


@dataclass(frozen=True)
class StabilityVerdict:
    kind: VerdictKind
    beta: Optional[float] = None
    gamma: Optional[float] = None
    evidence: Evidence = Evidence.ANALYTIC

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "beta": self.beta,
            "gamma": self.gamma,
            "evidence": self.evidence.value,
        }


def _estimate(model, grid):
    u_far = np.logspace(math.log10(grid.u_min), math.log10(grid.u_max), grid.n_beta)
    u_near = np.logspace(math.log10(grid.u_floor), math.log10(grid.u_near), grid.n_gamma)
    r_far = ratio(model, u_far)
    r_near = ratio(model, u_near)
    # a NaN ratio means the bound cannot be trusted in either direction
    beta = float(np.max(r_far)) if not np.any(np.isnan(r_far)) else math.nan
    gamma = float(np.min(r_near)) if not np.any(np.isnan(r_near)) else math.nan
    return beta, gamma


def classify(model, grid=None):
    """Classify the zero equilibrium of the semi-discrete scheme.

    Closed-form ``analytic_beta``/``analytic_gamma`` are used when the model
    carries them; otherwise both are estimated on ``grid`` (a
    :class:`GridSpec`) and a definite verdict is only returned when the
    estimate clears 1 by ``grid.margin``.
    """
    grid = grid or GridSpec()
    if model.analytic_beta is not None or model.analytic_gamma is not None:
        beta, gamma = model.analytic_beta, model.analytic_gamma
        if beta is not None and beta < 1:
            kind = VerdictKind.AS_STABLE
        elif gamma is not None and gamma > 1:
            kind = VerdictKind.AS_UNSTABLE
        else:
            kind = VerdictKind.INDETERMINATE
        return StabilityVerdict(kind, beta, gamma, Evidence.ANALYTIC)

    beta, gamma = _estimate(model, grid)
    stable = beta <= 1 - grid.margin
    unstable = gamma >= 1 + grid.margin
    if stable and not unstable:
        kind = VerdictKind.AS_STABLE
    elif unstable and not stable:
        kind = VerdictKind.AS_UNSTABLE
    else:
        kind = VerdictKind.INDETERMINATE
    return StabilityVerdict(
        kind,
        None if math.isnan(beta) else beta,
        None if math.isnan(gamma) else gamma,
        Evidence.GRID_ESTIMATE,
    )
