"""Domain types and the closed-form AIMD admission dynamics.

Every node runs the same two-phase controller between clearance events of the
batch queue: a multiplicative drop ``u -> beta * u`` at the event, then a
linear ramp with slope ``alpha`` until the batch queue empties again.  Because
the ramps are affine, the cycle period and every per-cycle average have exact
closed forms, collected here.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

ABS_TOL = 1e-12
REL_TOL = 1e-9


class NegativeCyclePolicy(str, enum.Enum):
    ERROR = "error"
    REPEAT_BACKOFF = "repeat-backoff"


class ConfigError(ValueError):
    """Raised by :func:`validate_config`; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NonPositiveCycle(ArithmeticError):
    """The batch queue cannot refill: ``lambda <= sum(beta_i * u_i)``."""

    def __init__(self, period: float, detail: str = ""):
        self.period = period
        msg = f"non-positive cycle period T={period!r}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


@dataclass(frozen=True)
class NodeParams:
    alpha: float
    beta: float
    u0: float = 0.0
    w0: float = 0.0


@dataclass(frozen=True)
class SystemConfig:
    lam: float
    nodes: tuple[NodeParams, ...]
    negative_cycle_policy: NegativeCyclePolicy = NegativeCyclePolicy.REPEAT_BACKOFF
    max_cycles: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(
            self, "negative_cycle_policy", NegativeCyclePolicy(self.negative_cycle_policy)
        )

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([p.alpha for p in self.nodes], dtype=float)

    @property
    def beta(self) -> np.ndarray:
        return np.array([p.beta for p in self.nodes], dtype=float)

    @property
    def u0(self) -> np.ndarray:
        return np.array([p.u0 for p in self.nodes], dtype=float)

    @property
    def w0(self) -> np.ndarray:
        return np.array([p.w0 for p in self.nodes], dtype=float)


@dataclass(frozen=True)
class ValidatedConfig:
    """A config that passed :func:`validate_config`, with the normalized growth vector."""

    config: SystemConfig
    alpha_bar: tuple[float, ...]

    # passthroughs so a ValidatedConfig can stand in for a SystemConfig
    def __getattr__(self, name):
        if name.startswith("__") or "config" not in self.__dict__:
            raise AttributeError(name)
        return getattr(self.__dict__["config"], name)


@dataclass(frozen=True)
class NodeState:
    u: float
    w: float
    gamma: float = 0.0


@dataclass(frozen=True)
class SystemState:
    k: int
    t: float
    nodes: tuple[NodeState, ...]
    delta: float = 0.0

    @property
    def u(self) -> np.ndarray:
        return np.array([s.u for s in self.nodes], dtype=float)

    @property
    def w(self) -> np.ndarray:
        return np.array([s.w for s in self.nodes], dtype=float)

    @classmethod
    def initial(cls, cfg: SystemConfig | ValidatedConfig) -> "SystemState":
        return cls(0, 0.0, tuple(NodeState(p.u0, p.w0) for p in cfg.nodes))


@dataclass(frozen=True)
class Equilibrium:
    t_star: float
    u_star: tuple[float, ...]
    w_star: tuple[float, ...]


AnyConfig = Union[SystemConfig, ValidatedConfig]


def validate_config(cfg: AnyConfig) -> ValidatedConfig:
    if isinstance(cfg, ValidatedConfig):
        return cfg
    problems = []
    if not (math.isfinite(cfg.lam) and cfg.lam > 0):
        problems.append(f"arrival rate must be positive, got lambda={cfg.lam!r}")
    if cfg.n < 1:
        problems.append("at least one node is required")
    if not (isinstance(cfg.max_cycles, int) and cfg.max_cycles > 0):
        problems.append(f"max_cycles must be a positive integer, got {cfg.max_cycles!r}")
    for i, p in enumerate(cfg.nodes, start=1):
        if not (math.isfinite(p.alpha) and p.alpha > 0):
            problems.append(f"node {i}: growth rate must be positive, got alpha={p.alpha!r}")
        if not (0.0 < p.beta < 1.0):
            problems.append(f"node {i}: backoff must lie in open interval (0,1), got beta={p.beta!r}")
        if not (math.isfinite(p.u0) and p.u0 >= 0):
            problems.append(f"node {i}: initial admission rate must be >= 0, got u0={p.u0!r}")
        if not (math.isfinite(p.w0) and p.w0 >= 0):
            problems.append(f"node {i}: initial queue must be >= 0, got w0={p.w0!r}")
    if not problems and cfg.negative_cycle_policy is NegativeCyclePolicy.ERROR:
        backed_off = sum(p.beta * p.u0 for p in cfg.nodes)
        if cfg.lam <= backed_off:
            problems.append(
                f"infeasible initial state: lambda={cfg.lam!r} <= sum(beta*u0)={backed_off!r}"
            )
    if problems:
        raise ConfigError(problems)
    total = math.fsum(p.alpha for p in cfg.nodes)
    return ValidatedConfig(cfg, tuple(p.alpha / total for p in cfg.nodes))


def _rates(state) -> np.ndarray:
    if isinstance(state, SystemState):
        return state.u
    return np.asarray(state, dtype=float)


def cycle_period(state: SystemState | Sequence[float], cfg: AnyConfig) -> float:
    """Time for the batch queue to empty again after the backoff at this event.

    ``state`` may be a :class:`SystemState` or a plain vector of pre-backoff
    admission rates.  Raises :class:`NonPositiveCycle` when the backed-off
    rates already absorb the whole arrival rate.
    """
    u = _rates(state)
    alpha = cfg.alpha
    beta = cfg.beta
    period = (cfg.lam - math.fsum(beta * u)) / (math.fsum(alpha) / 2.0)
    if period <= 0:
        raise NonPositiveCycle(period)
    return period


def admission_update(u_k: float, T: float, p: NodeParams) -> float:
    return p.beta * u_k + p.alpha * T


def admission_rate_at(tau: float, u_k: float, p: NodeParams, T: float | None = None) -> float:
    """Admission rate ``tau`` seconds into the additive-increase phase."""
    if tau < 0 or (T is not None and tau > T):
        raise ValueError(f"tau={tau!r} outside the cycle [0, {T}]")
    return p.beta * u_k + p.alpha * tau


def average_admission_rate(u_k: float, T: float, p: NodeParams) -> float:
    return p.beta * u_k + 0.5 * p.alpha * T


def admitted_volume(u_k: float, T: float, p: NodeParams) -> float:
    """Requests admitted by one node over a whole cycle (area of one trapezoid)."""
    return (2.0 * p.beta * u_k + p.alpha * T) * T / 2.0


def fixed_point(cfg: AnyConfig) -> Equilibrium:
    alpha = cfg.alpha
    beta = cfg.beta
    t_star = cfg.lam / math.fsum(0.5 * alpha * (1.0 + beta) / (1.0 - beta))
    u_star = alpha / (1.0 - beta) * t_star
    # fixed point of w -> w + (a/2) T^2 - sqrt(2 a w) T
    w_star = alpha * t_star**2 / 8.0
    return Equilibrium(t_star, tuple(u_star.tolist()), tuple(w_star.tolist()))


def table1_config(policy: NegativeCyclePolicy | str = NegativeCyclePolicy.REPEAT_BACKOFF) -> SystemConfig:
    """Four-node setup of the reference numerical example."""
    nodes = tuple(
        NodeParams(alpha=5.0 * i, beta=0.5, u0=5.0 * (i - 1), w0=7.5 * (2 * i - 1))
        for i in range(1, 5)
    )
    return SystemConfig(lam=100.0, nodes=nodes, negative_cycle_policy=policy)
