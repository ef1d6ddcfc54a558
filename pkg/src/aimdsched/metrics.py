"""Queueing-time metrics for one node over one cycle, plus conservation checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import NodeParams


@dataclass(frozen=True)
class CycleMetrics:
    u_av: float
    w_av: float
    t_delta: float
    t_w: float
    t_total: float


@dataclass(frozen=True)
class TracePoint:
    t: float
    u: tuple[float, ...]
    w: tuple[float, ...]
    delta_i: tuple[float, ...]
    delta: float


def generic_queueing_time(t, X, Y, q0: float = 0.0) -> float:
    """Average wait ``int_0^t Q(s) ds / X(t)`` from sampled cumulative counts.

    ``Q = q0 + X - Y``; ``q0`` is a backlog present at ``t[0]`` that is not
    counted as an arrival.  Integration is by the trapezoid rule on the grid.
    """
    t = np.asarray(t, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X[-1] <= 0:
        raise ZeroDivisionError("no arrivals: queueing time undefined")
    if np.any(np.diff(X) < 0):
        raise ValueError("cumulative arrivals must be nondecreasing")
    Q = q0 + X - Y
    return float(np.trapezoid(Q, t) / X[-1])


def batch_share_trace(tau: float, u_k: float, u_av: float, p: NodeParams) -> float:
    """Requests in the batch queue that are bound for this node, ``tau`` into the cycle."""
    return u_av * tau - p.beta * u_k * tau - 0.5 * p.alpha * tau * tau


def batch_share_area(T: float, alpha: float) -> float:
    # int_0^T (alpha/2)(T tau - tau^2) dtau
    return alpha * T**3 / 12.0


def node_queue_area(w_k: float, w_k1: float, T: float, alpha: float) -> float:
    """``int_0^T w(tau) dtau`` for the quadratic queue path joining ``w_k`` to ``w_k1``."""
    return (0.5 * (w_k + w_k1) - alpha * T * T / 12.0) * T


def queueing_time(w_k: float, w_k1: float, u_av: float, T: float, alpha: float) -> CycleMetrics:
    if u_av <= 0:
        raise ZeroDivisionError("average admission rate is zero: queueing time undefined")
    w_av = 0.5 * (w_k + w_k1)
    share = u_av * T
    t_delta = batch_share_area(T, alpha) / share if T > 0 else 0.0
    t_w = node_queue_area(w_k, w_k1, T, alpha) / share if T > 0 else w_av / u_av
    return CycleMetrics(u_av=u_av, w_av=w_av, t_delta=t_delta, t_w=t_w, t_total=w_av / u_av)


def throughput_conservation(u_av: Sequence[float], lam: float) -> float:
    return abs(math.fsum(u_av) - lam)
