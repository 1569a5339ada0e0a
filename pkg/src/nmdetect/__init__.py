"""Target detection and sensing by diffusing nanomachine swarms.

Closed-form detection statistics for Poisson-deployed Brownian sensors around
a (possibly mobile, possibly degrading) spherical target, a particle Monte
Carlo simulator for validating them, and an experiment harness that renders
both into comparison tables.
"""

__version__ = "0.1.0"

from .model import (
    ConfigError,
    MarkerSpec,
    NmClass,
    SimConfig,
    SystemConfig,
    TargetSpec,
    load_config,
    validate,
    validate_sim,
)
from .numerics import ConvergenceError, QuadratureSpec, RngStream, erfc, integrate, rng_stream

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "MarkerSpec",
    "NmClass",
    "QuadratureSpec",
    "RngStream",
    "SimConfig",
    "SystemConfig",
    "TargetSpec",
    "__version__",
    "erfc",
    "integrate",
    "load_config",
    "rng_stream",
    "validate",
    "validate_sim",
]
