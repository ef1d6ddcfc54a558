"""Tangent-line service-rate controller and the node queue it drives.

Within a cycle the node's cumulative admissions ``y(tau) = w(tau) + gamma tau``
are convex in ``tau``.  Choosing the served line ``z(tau) = gamma tau`` tangent
to ``y`` from below gives the feedback law
``gamma = beta u + sqrt(2 alpha w)``, tangency at ``t_z = sqrt(2 w / alpha)``.
Under that law the queue map is ``w -> (sqrt(w) - sqrt(alpha/2) T)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import ABS_TOL, NodeParams

CLAMP_TOL = 1e-12


class NotYet(LookupError):
    """The queue never entered its invariant set within the supplied horizon."""


@dataclass(frozen=True)
class AllocationDecision:
    gamma: float
    t_z: float


@dataclass(frozen=True)
class InvariantSet:
    lower: float
    upper: float

    def __contains__(self, w: float) -> bool:
        return contains(self, w)


@dataclass(frozen=True)
class EntryResult:
    step: int | None
    bound_linear: int | None  # numerator uses T(k*)
    bound_squared: int | None  # numerator uses T(k*)^2

    def require(self) -> int:
        if self.step is None:
            raise NotYet("queue did not enter its invariant set within the horizon")
        return self.step


def _clamp(w: float) -> float:
    return 0.0 if w < CLAMP_TOL else w


def service_rate(u_k: float, w_k: float, p: NodeParams) -> AllocationDecision:
    if w_k < 0:
        raise ValueError(f"queue length must be nonnegative, got {w_k!r}")
    w_k = _clamp(w_k)
    root = math.sqrt(2.0 * p.alpha * w_k)
    return AllocationDecision(p.beta * u_k + root, math.sqrt(2.0 * w_k / p.alpha))


def queue_update(w_k: float, u_k: float, gamma: float, T: float, p: NodeParams) -> float:
    w_next = w_k + (p.beta * u_k + 0.5 * p.alpha * T - gamma) * T
    return _clamp(w_next) if w_next > -CLAMP_TOL else w_next


def closed_loop_queue(w_k: float, T: float, alpha: float) -> float:
    """Queue map with the tangent controller substituted in."""
    w_k = _clamp(w_k)
    return _clamp(w_k + 0.5 * alpha * T * T - math.sqrt(2.0 * alpha * w_k) * T)


def invariant_set(T: float, p: NodeParams) -> InvariantSet:
    if T < 0:
        raise ValueError(f"cycle period must be nonnegative, got {T!r}")
    return InvariantSet(0.0, 0.5 * p.alpha * T * T)


def contains(s: InvariantSet, w: float) -> bool:
    return s.lower - ABS_TOL <= w <= s.upper + ABS_TOL


def entry_step(run: Sequence[tuple[float, float]], p: NodeParams) -> EntryResult:
    """First cycle index whose queue lies in that cycle's invariant set.

    ``run`` holds ``(w(k), T(k))`` pairs.  Alongside the detected index, the
    a-priori step count is reported in two forms: with ``T(k*)`` or ``T(k*)^2``
    in the numerator, over ``(alpha/2) min T(j)^2``.
    """
    run = list(run)
    step = None
    for k, (w, T) in enumerate(run):
        if contains(invariant_set(T, p), w):
            step = k
            break
    if step is None or step == 0:
        return EntryResult(step, None, None)
    w0 = run[0][0]
    t_entry = run[step][1]
    floor = 0.5 * p.alpha * min(T * T for _, T in run[:step])
    linear = math.ceil((w0 - 0.5 * p.alpha * t_entry) / floor)
    squared = math.ceil((w0 - 0.5 * p.alpha * t_entry**2) / floor)
    return EntryResult(step, linear, squared)


def admitted_cumulative(tau: float, w_k: float, u_k: float, gamma: float, p: NodeParams) -> float:
    """``y(tau)``: requests admitted to the node by ``tau`` (counting the backlog)."""
    return w_k + p.beta * u_k * tau + 0.5 * p.alpha * tau * tau


def served_cumulative(tau: float, gamma: float) -> float:
    """``z(tau)``: the most the node can have served by ``tau``."""
    return gamma * tau


def queue_at(tau: float, w_k: float, u_k: float, gamma: float, p: NodeParams) -> float:
    return admitted_cumulative(tau, w_k, u_k, gamma, p) - served_cumulative(tau, gamma)


def descent_holds(w_k: float, w_next: float, T: float, alpha: float, squared: bool = False) -> bool:
    """Per-step decrease of a queue that starts outside its invariant set.

    ``squared=False`` checks a decrement of ``(alpha/2) T``; ``squared=True``
    checks ``(alpha/2) T^2``.  Since ``w - f(w)`` is increasing in ``w`` and
    equals ``(alpha/2) T^2`` on the set boundary, only the squared form is
    guaranteed; the two differ once ``T < 1``.
    """
    drop = 0.5 * alpha * (T * T if squared else T)
    return w_next <= w_k - drop + ABS_TOL


def iter_queue(w0: float, periods: Iterable[float], alpha: float) -> list[float]:
    out = [w0]
    for T in periods:
        out.append(closed_loop_queue(out[-1], T, alpha))
    return out
