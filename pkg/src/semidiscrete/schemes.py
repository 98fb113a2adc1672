"""One-step rules and the guarded path driver.

Three fixed-step rules are available:

``SemiDiscrete``
    ``y' = y exp{(a(y) - b(y)^2/2) delta + b(y) dW}``, the exact solution of
    the linear SDE obtained by freezing ``a`` and ``b`` at the left end of the
    step. Nonnegative by construction.
``EulerMaruyama``
    ``y' = y + y a(y) delta + y b(y) dW``. No positivity guarantee.
``TamedEuler``
    drift-tamed Euler, ``y' = y + m / (1 + |m|) + y b(y) dW`` with
    ``m = y a(y) delta``. Kept as a baseline only.

All paths of a run go through :func:`run_paths`, which advances a batch of
paths in lock-step with numpy. A single path is a batch of one, so a path
simulated alone is bit-identical to the same path inside an ensemble.
"""

import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CoefficientNegative, DomainError, InvalidGuard
from .model import eval_diffusion, eval_drift

__all__ = [
    "SchemeKind",
    "Termination",
    "GuardConfig",
    "Trajectory",
    "sd_step",
    "em_step",
    "tamed_em_step",
    "simulate_path",
    "run_paths",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

# exp(709.78) is the largest finite double
EXP_OVERFLOW = 709.0
_BLOCK_STEPS = 1024


class SchemeKind(enum.Enum):
    SEMI_DISCRETE = "SemiDiscrete"
    EULER_MARUYAMA = "EulerMaruyama"
    TAMED_EULER = "TamedEuler"

    @classmethod
    def parse(cls, name):
        """Accept the enum itself, its value, or the short CLI names."""
        if isinstance(name, cls):
            return name
        short = {"sd": cls.SEMI_DISCRETE, "em": cls.EULER_MARUYAMA, "tamed": cls.TAMED_EULER}
        if name in short:
            return short[name]
        return cls(name)

    @property
    def short(self):
        return {"SemiDiscrete": "sd", "EulerMaruyama": "em", "TamedEuler": "tamed"}[self.value]


class Termination(enum.Enum):
    COMPLETED = "Completed"
    EXPLODED = "Exploded"
    ABSORBED = "Absorbed"


_CODE = {0: Termination.COMPLETED, 1: Termination.EXPLODED, 2: Termination.ABSORBED}


@dataclass(frozen=True)
class GuardConfig:
    """Early-stopping thresholds checked after every step.

    A path is ``Exploded`` once ``|y| >= explosion_threshold`` (or ``y`` is
    not finite) and ``Absorbed`` once ``0 < ... |y| <= absorption_floor``
    after a nonzero start.
    """

    explosion_threshold: float = 1e8
    absorption_floor: float = 1e-300

    def __post_init__(self):
        if not self.explosion_threshold > self.absorption_floor:
            raise InvalidGuard(
                f"explosion_threshold={self.explosion_threshold!r} must exceed "
                f"absorption_floor={self.absorption_floor!r}"
            )


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    termination: Termination
    scheme: SchemeKind
    delta: float
    termination_time: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_steps_taken(self):
        return int(round(self.times[-1] / self.delta)) if len(self.times) else 0


# --- step rules -----------------------------------------------------------


def _check_factors(a, b, y, allow_negative_state=False):
    if a.min() >= 0 and b.min() >= 0:
        return
    for which, v in (("drift", a), ("diffusion", b)):
        bad = v < 0
        if allow_negative_state:
            # Euler baselines leave the half-line; only u >= 0 is guarded
            bad &= y >= 0
        if bad.any():
            i = np.flatnonzero(bad)[0]
            raise CoefficientNegative(which, float(y[i]), float(v[i]))


def _sd(model, y, delta, dW):
    a = np.asarray(model.drift_factor(y), dtype=np.float64)
    b = np.asarray(model.diffusion_factor(y), dtype=np.float64)
    _check_factors(a, b, y)
    expo = (a - 0.5 * (b * b)) * delta + b * dW
    out = y * np.exp(expo)
    # exponent above the overflow bound (or NaN once the factors overflow)
    bad = ~(expo <= EXP_OVERFLOW)
    if bad.any():
        out[bad] = np.inf
        out[bad & (y == 0)] = 0.0
    return out


def _em(model, y, delta, dW):
    a = np.asarray(model.drift_factor(y), dtype=np.float64)
    b = np.asarray(model.diffusion_factor(y), dtype=np.float64)
    _check_factors(a, b, y, allow_negative_state=True)
    return y + y * a * delta + y * b * dW


def _tamed(model, y, delta, dW):
    a = np.asarray(model.drift_factor(y), dtype=np.float64)
    b = np.asarray(model.diffusion_factor(y), dtype=np.float64)
    _check_factors(a, b, y, allow_negative_state=True)
    m = y * a * delta
    return y + m / (1.0 + np.abs(m)) + y * b * dW


_STEP = {
    SchemeKind.SEMI_DISCRETE: _sd,
    SchemeKind.EULER_MARUYAMA: _em,
    SchemeKind.TAMED_EULER: _tamed,
}


def _check_step_args(delta):
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")


def _apply(rule, model, y, delta, dW):
    y = np.asarray(y, dtype=np.float64)
    scalar = y.ndim == 0
    y1 = np.atleast_1d(y)
    dW1 = np.broadcast_to(np.asarray(dW, dtype=np.float64), y1.shape)
    with np.errstate(all="ignore"):
        out = rule(model, y1, delta, dW1)
    return float(out[0]) if scalar else out.reshape(y.shape)


def sd_step(model, y, delta, dW):
    """One semi-discrete step. Returns exactly 0 at ``y == 0`` and ``+inf``
    when the exponent exceeds 709."""
    _check_step_args(delta)
    if np.any(np.asarray(y) < 0):
        raise DomainError("the semi-discrete step needs y >= 0")
    return _apply(_sd, model, y, delta, dW)


def em_step(model, y, delta, dW):
    """One Euler-Maruyama step (may leave the positive half-line)."""
    _check_step_args(delta)
    return _apply(_em, model, y, delta, dW)


def tamed_em_step(model, y, delta, dW):
    """One drift-tamed Euler step; the drift increment is bounded by 1 in
    absolute value."""
    _check_step_args(delta)
    return _apply(_tamed, model, y, delta, dW)


# --- path driver ----------------------------------------------------------


def record_steps(n_steps, record_every):
    """Step indices at which states are recorded: every ``record_every``-th
    step plus the last one."""
    ks = np.arange(0, n_steps + 1, record_every, dtype=np.int64)
    if ks[-1] != n_steps:
        ks = np.append(ks, n_steps)
    return ks


@dataclass
class BatchResult:
    """Per-path outcome of :func:`run_paths` (arrays indexed like ``streams``)."""

    kind: np.ndarray            # 0 completed, 1 exploded, 2 absorbed
    term_step: np.ndarray       # step at which the path stopped (n_steps if completed)
    final_state: np.ndarray
    went_negative: np.ndarray   # any state < 0 along the path
    record_k: np.ndarray
    recorded: Optional[np.ndarray] = None       # (n_paths, n_records), NaN after stop
    moment_sum: Optional[np.ndarray] = None     # per record, over non-exploded paths
    moment_sumsq: Optional[np.ndarray] = None
    moment_count: Optional[np.ndarray] = None


def run_paths(model, scheme, y0, delta, n_steps, streams, guards=None,
              record_every=1, keep_states=True, moment_p=None):
    """Advance one path per stream for ``n_steps`` steps.

    Each path consumes exactly one increment from its own stream per step
    it takes; paths stop early on explosion or absorption. With
    ``moment_p`` set, sums of ``|y|^p`` over the batch are accumulated at
    every recorded step: absorbed paths count as 0, exploded paths are left
    out from their explosion onwards.
    """
    scheme = SchemeKind.parse(scheme)
    guards = guards or GuardConfig()
    _check_step_args(delta)
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    if not y0 >= 0:
        raise DomainError("y0 must be nonnegative")
    step = _STEP[scheme]
    thr, floor = guards.explosion_threshold, guards.absorption_floor
    absorbing = y0 != 0
    sqdt = math.sqrt(delta)
    check_negative = scheme is not SchemeKind.SEMI_DISCRETE

    n = len(streams)
    ks = record_steps(n_steps, record_every)
    n_rec = len(ks)
    kind = np.zeros(n, dtype=np.int8)
    term_step = np.full(n, n_steps, dtype=np.int64)
    final = np.full(n, float(y0))
    negative = np.zeros(n, dtype=bool)
    recorded = np.full((n, n_rec), np.nan) if keep_states else None
    if moment_p is not None:
        m_sum = np.zeros(n_rec)
        m_sq = np.zeros(n_rec)
        m_cnt = np.zeros(n_rec, dtype=np.int64)
    n_absorbed = 0

    def stop(y, flag, k, idx):
        ay = np.abs(y)
        boom = flag & ~(ay < thr)
        sink = flag & ~boom
        kind[idx[boom]] = 1
        kind[idx[sink]] = 2
        term_step[idx[flag]] = k
        final[idx[flag]] = y[flag]
        return int(np.count_nonzero(sink))

    def flagged(y):
        ay = np.abs(y)
        if absorbing:
            return ~((ay < thr) & (ay > floor))
        return ~(ay < thr)

    def record(r, y, live, idx):
        if recorded is not None:
            recorded[idx[live], r] = y[live]
        if moment_p is not None:
            v = np.abs(y[live]) ** moment_p
            m_sum[r] = np.sum(v)
            m_sq[r] = np.sum(v * v)
            m_cnt[r] = v.size + n_absorbed

    err = np.seterr(all="ignore")
    try:
        # step 0
        idx = np.arange(n)
        y = np.full(n, float(y0))
        flag = flagged(y)
        if flag.any():
            n_absorbed += stop(y, flag, 0, idx)
        live = ~flag
        if recorded is not None:
            recorded[:, 0] = y
        if moment_p is not None:
            record(0, y, live, idx)
        r_next = 1

        k = 0
        while k < n_steps and live.any():
            idx = idx[live]
            y = y[live]
            b = min(_BLOCK_STEPS, n_steps - k)
            dws = sqdt * np.stack([streams[i].peek(b) for i in idx], axis=1)
            live = np.ones(idx.size, dtype=bool)
            all_live = True
            taken = np.full(idx.size, b, dtype=np.int64)
            for j in range(b):
                k += 1
                y_new = step(model, y, delta, dws[j])
                y = y_new if all_live else np.where(live, y_new, y)
                if check_negative:
                    neg = y < 0
                    if neg.any():
                        negative[idx[neg & live]] = True
                flag = flagged(y)
                if not all_live:
                    flag &= live
                if flag.any():
                    n_absorbed += stop(y, flag, k, idx)
                    live = live & ~flag
                    taken[flag] = j + 1
                    all_live = False
                if r_next < n_rec and ks[r_next] == k:
                    record(r_next, y, live, idx)
                    r_next += 1
                if not all_live and not live.any():
                    break
            for i, t in zip(idx.tolist(), taken.tolist()):
                streams[i].advance(t)
            final[idx[live]] = y[live]
    finally:
        np.seterr(**err)

    # paths that all stopped early leave later records untouched
    if moment_p is not None:
        for r in range(r_next, n_rec):
            m_cnt[r] = n_absorbed
    return BatchResult(
        kind=kind,
        term_step=term_step,
        final_state=final,
        went_negative=negative,
        record_k=ks,
        recorded=recorded,
        moment_sum=m_sum if moment_p is not None else None,
        moment_sumsq=m_sq if moment_p is not None else None,
        moment_count=m_cnt if moment_p is not None else None,
    )


def trajectory_from_batch(res, i, scheme, delta, meta=None):
    """Assemble the :class:`Trajectory` of path ``i`` of a batch result."""
    ks = res.record_k
    stop = int(res.term_step[i])
    keep = ks <= stop
    steps = ks[keep]
    states = res.recorded[i, keep]
    if steps[-1] != stop:
        steps = np.append(steps, stop)
        states = np.append(states, res.final_state[i])
    else:
        states = states.copy()
        states[-1] = res.final_state[i]
    term = _CODE[int(res.kind[i])]
    return Trajectory(
        times=steps * delta,
        states=states,
        termination=term,
        scheme=SchemeKind.parse(scheme),
        delta=delta,
        termination_time=None if term is Termination.COMPLETED else stop * delta,
        meta=dict(meta or {}),
    )


def simulate_path(model, scheme, y0, delta, n_steps, stream, guards=None, record_every=1):
    """Simulate one path, drawing its increments from ``stream``.

    Returns a :class:`Trajectory`. Termination is ``Exploded(t)`` at the
    first ``t`` with ``|y| >= guards.explosion_threshold``, ``Absorbed(t)``
    when a path started above zero falls to ``guards.absorption_floor`` or
    below, else ``Completed``. A path started at 0 stays at 0 and completes.
    """
    scheme = SchemeKind.parse(scheme)
    res = run_paths(model, scheme, y0, delta, n_steps, [stream], guards, record_every)
    meta = {
        "seed": stream.master_seed,
        "path": stream.path_index,
        "scheme": scheme.value,
        "delta": delta,
        "model": model.label,
    }
    return trajectory_from_batch(res, 0, scheme, delta, meta)


# --- CSV ------------------------------------------------------------------


def write_trajectory_csv(traj, fh=None):
    """Write ``traj`` as CSV; returns the text when ``fh`` is None.

    Layout: a ``# seed=.., path=.., scheme=.., delta=.., model=..`` header,
    a ``t,y`` column line, one row per recorded state and a trailing
    ``# termination=..`` comment. Floats use the shortest round-trip repr.
    """
    out = io.StringIO() if fh is None else fh
    m = traj.meta
    out.write(
        f"# seed={m.get('seed')}, path={m.get('path')}, scheme={traj.scheme.value}, "
        f"delta={traj.delta!r}, model={m.get('model')}\n"
    )
    out.write("t,y\n")
    for t, y in zip(traj.times.tolist(), traj.states.tolist()):
        out.write(f"{t!r},{y!r}\n")
    if traj.termination is Termination.COMPLETED:
        out.write("# termination=Completed\n")
    else:
        out.write(f"# termination={traj.termination.value} t={traj.termination_time!r}\n")
    if fh is None:
        return out.getvalue()
    return None


def read_trajectory_csv(text):
    """Parse the output of :func:`write_trajectory_csv`."""
    lines = text.strip().splitlines()
    header = lines[0].lstrip("# ")
    meta = {}
    for part in header.split(", "):
        key, _, value = part.partition("=")
        meta[key] = value
    rows = [ln.split(",") for ln in lines[2:-1]]
    times = np.array([float(r[0]) for r in rows])
    states = np.array([float(r[1]) for r in rows])
    tail = lines[-1].lstrip("# ").split()
    term = Termination(tail[0].split("=")[1])
    t_term = float(tail[1].split("=")[1]) if len(tail) > 1 else None
    scheme = SchemeKind(meta.pop("scheme"))
    delta = float(meta.pop("delta"))
    return Trajectory(times, states, term, scheme, delta, t_term, meta)
