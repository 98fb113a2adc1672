"""Run configuration: a TOML file plus command-line overrides.

Example file::

    scheme = "sd"
    y0 = 1.0
    delta = 0.01
    steps = 10000
    seed = 1
    paths = 1000

    [model]
    family = "power"
    sigma = 2.0
    drift_exp = 2
    diff_exp = 1

Unset optional fields are omitted on serialisation (TOML has no null).
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .errors import ConfigError, SemiDiscreteError
from .model import model_from_spec
from .montecarlo import EnsembleConfig
from .schemes import GuardConfig, SchemeKind

__all__ = ["RunConfig", "load_config"]


@dataclass
class RunConfig:
    model: dict = field(default_factory=lambda: {"family": "power", "sigma": 2.0, "drift_exp": 2.0, "diff_exp": 1.0})
    scheme: str = "sd"
    y0: float = 1.0
    delta: float = 0.01
    steps: int = 10_000
    seed: int = 0
    paths: int = 1000
    workers: Optional[int] = None
    explosion_threshold: float = 1e8
    absorption_floor: float = 1e-300
    record_every: int = 1
    eps_zero: float = 1e-6
    moment_p: Optional[float] = None
    out: Optional[str] = None
    dump_paths: Optional[str] = None

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, text):
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"invalid TOML: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}

    def to_toml(self):
        return tomli_w.dumps(self.to_dict())

    def with_overrides(self, **overrides):
        """Copy with every non-None override applied (flags win over file)."""
        data = dataclasses.asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return type(self).from_dict(data)

    def validate(self):
        """Check every field; raises :class:`ConfigError` naming the first bad one."""
        if not isinstance(self.model, dict):
            raise ConfigError("model", "must be a table")
        try:
            model_from_spec(self.model)
        except SemiDiscreteError as exc:
            raise ConfigError("model", str(exc)) from None
        except TypeError as exc:
            raise ConfigError("model", str(exc)) from None
        try:
            SchemeKind.parse(self.scheme)
        except ValueError:
            raise ConfigError("scheme", f"unknown scheme {self.scheme!r}") from None
        _positive_number("y0", self.y0, allow_zero=True)
        _positive_number("delta", self.delta)
        _positive_int("steps", self.steps)
        _positive_int("paths", self.paths)
        _positive_int("record_every", self.record_every)
        if self.workers is not None:
            _positive_int("workers", self.workers)
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        _positive_number("explosion_threshold", self.explosion_threshold)
        _positive_number("absorption_floor", self.absorption_floor, allow_zero=True)
        if not self.explosion_threshold > self.absorption_floor:
            raise ConfigError("explosion_threshold", "must exceed absorption_floor")
        _positive_number("eps_zero", self.eps_zero)
        if not self.eps_zero > self.absorption_floor:
            raise ConfigError("eps_zero", "must exceed absorption_floor")
        if self.moment_p is not None:
            _positive_number("moment_p", self.moment_p)
            if not self.moment_p < 1:
                raise ConfigError("moment_p", "must lie in (0, 1)")
        for name in ("out", "dump_paths"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise ConfigError(name, "must be a path string")

    # -- conversions -------------------------------------------------------

    def build_model(self):
        return model_from_spec(self.model)

    def guards(self):
        return GuardConfig(self.explosion_threshold, self.absorption_floor)

    def ensemble_config(self, n_paths=None):
        return EnsembleConfig(
            model=self.build_model(),
            scheme=SchemeKind.parse(self.scheme),
            y0=float(self.y0),
            delta=float(self.delta),
            n_steps=int(self.steps),
            n_paths=int(n_paths if n_paths is not None else self.paths),
            master_seed=int(self.seed),
            guards=self.guards(),
            eps_zero=float(self.eps_zero),
            moment_p=self.moment_p,
            record_every=int(self.record_every),
        )


def _positive_number(name, value, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, "must be a number")
    if not (value >= 0 if allow_zero else value > 0):
        raise ConfigError(name, "must be " + ("nonnegative" if allow_zero else "positive"))


def _positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(name, "must be a positive integer")


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_toml(fh.read())
