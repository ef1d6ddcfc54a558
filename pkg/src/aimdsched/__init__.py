"""AIMD admission control and decentralized resource allocation for multi-queue systems."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ConfigError,
    Equilibrium,
    NegativeCyclePolicy,
    NodeParams,
    NodeState,
    NonPositiveCycle,
    SystemConfig,
    SystemState,
    ValidatedConfig,
    admission_rate_at,
    admission_update,
    average_admission_rate,
    cycle_period,
    fixed_point,
    table1_config,
    validate_config,
)
