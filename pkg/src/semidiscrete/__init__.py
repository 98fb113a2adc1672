"""Semi-discrete exponential scheme for scalar SDEs ``dx = x a(x) dt + x b(x) dW``."""

from .errors import (
    CoefficientNegative,
    ConfigError,
    DegenerateDiffusion,
    DomainError,
    ExpressionError,
    InvalidGuard,
    NoValidP,
    PathSimulationError,
    SemiDiscreteError,
    UndefinedEstimate,
)
from .model import (
    Evidence,
    GridSpec,
    SdeModel,
    StabilityVerdict,
    VerdictKind,
    classify,
    constant_model,
    eval_diffusion,
    eval_drift,
    expression_model,
    model_from_spec,
    power_model,
    ratio,
)
from .noise import IncrementStream, make_stream, next_increment
from .schemes import (
    GuardConfig,
    SchemeKind,
    Termination,
    Trajectory,
    em_step,
    read_trajectory_csv,
    sd_step,
    simulate_path,
    tamed_em_step,
    write_trajectory_csv,
)

__version__ = "0.1.0"
