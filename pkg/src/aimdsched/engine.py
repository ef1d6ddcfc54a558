"""Event-driven simulation of the multi-queue AIMD system.

Each cycle runs, in order: cycle period from the pre-backoff rates, the
service rate of every node from its queue at the event, the queue update, and
the admission-rate update.  The batch queue is empty at every event by
construction.

``run_oracle`` integrates the continuous-time dynamics by forward Euler and
locates clearance events from the sign change of the batch queue; it shares no
closed forms with ``run_deterministic`` and is used to cross-check it.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import allocation, metrics
from .model import (
    AnyConfig,
    NegativeCyclePolicy,
    NonPositiveCycle,
    admission_update,
    average_admission_rate,
    cycle_period,
    validate_config,
)

MAX_BACKOFF_REPEATS = 10_000


@dataclass(frozen=True)
class NodeCycle:
    u: float  # pre-backoff rate at the opening event (after any repeated backoffs)
    gamma: float
    t_z: float
    w: float
    w_next: float
    u_next: float
    metrics: metrics.CycleMetrics | None


@dataclass(frozen=True)
class CycleRecord:
    k: int
    t_start: float
    t_end: float
    T: float
    nodes: tuple[NodeCycle, ...]
    backoff_repeats: int = 0
    delta_end: float = 0.0

    @property
    def late_tangency(self) -> tuple[bool, ...]:
        """Nodes whose tangency point falls after the cycle ends."""
        return tuple(nc.t_z > self.T for nc in self.nodes)


@dataclass(frozen=True)
class StochasticConfig:
    seed: int
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class StochasticRun:
    records: tuple[CycleRecord, ...]
    arrivals: np.ndarray

    @property
    def mean_interarrival(self) -> float:
        return float(np.mean(np.diff(np.concatenate([[0.0], self.arrivals]))))

    @property
    def mean_cycle_period(self) -> float:
        return float(np.mean([r.T for r in self.records])) if self.records else math.nan


def _backoff_until_feasible(u: np.ndarray, vc, k: int) -> tuple[np.ndarray, float, int]:
    repeats = 0
    while True:
        try:
            return u, cycle_period(u, vc), repeats
        except NonPositiveCycle as exc:
            if vc.negative_cycle_policy is NegativeCyclePolicy.ERROR or repeats >= MAX_BACKOFF_REPEATS:
                raise NonPositiveCycle(
                    exc.period, f"cycle {k}: lambda={vc.lam} <= sum(beta*u)={float(np.dot(vc.beta, u))}"
                ) from None
            # zero-duration multiplicative decrease while the batch queue stays empty
            u = vc.beta * u
            repeats += 1


def run_deterministic(cfg: AnyConfig, K: int | None = None) -> list[CycleRecord]:
    vc = validate_config(cfg)
    K = vc.max_cycles if K is None else K
    u = vc.u0
    w = vc.w0.tolist()
    t = 0.0
    records = []
    for k in range(K):
        u, T, repeats = _backoff_until_feasible(u, vc, k)
        u = [float(x) for x in u]
        nodes = []
        for i, p in enumerate(vc.nodes):
            dec = allocation.service_rate(u[i], w[i], p)
            w_next = allocation.queue_update(w[i], u[i], dec.gamma, T, p)
            u_av = average_admission_rate(u[i], T, p)
            nodes.append(
                NodeCycle(
                    u=float(u[i]),
                    gamma=dec.gamma,
                    t_z=dec.t_z,
                    w=float(w[i]),
                    w_next=w_next,
                    u_next=admission_update(u[i], T, p),
                    metrics=metrics.queueing_time(w[i], w_next, u_av, T, p.alpha),
                )
            )
        records.append(CycleRecord(k, t, t + T, T, tuple(nodes), repeats))
        t += T
        u = np.array([nc.u_next for nc in nodes])
        w = [nc.w_next for nc in nodes]
    return records


def reconstruct_trace(rec: CycleRecord, cfg: AnyConfig, samples: int) -> list[metrics.TracePoint]:
    """Intra-cycle samples on a uniform grid over ``[0, T]``, both ends included."""
    if samples < 2:
        raise ValueError("need at least two samples per cycle")
    vc = validate_config(cfg)
    taus = np.linspace(0.0, rec.T, samples)
    points = []
    for j, tau in enumerate(taus):
        if j == samples - 1:
            tau = rec.T
        us, ws, ds = [], [], []
        for nc, p in zip(rec.nodes, vc.nodes):
            us.append(p.beta * nc.u + p.alpha * tau)
            ws.append(allocation.queue_at(tau, nc.w, nc.u, nc.gamma, p))
            u_av = average_admission_rate(nc.u, rec.T, p)
            ds.append(metrics.batch_share_trace(tau, nc.u, u_av, p))
        if j == samples - 1:
            # stitch exactly onto the next event
            us = [nc.u_next for nc in rec.nodes]
            ws = [nc.w_next for nc in rec.nodes]
        points.append(
            metrics.TracePoint(rec.t_start + tau, tuple(us), tuple(ws), tuple(ds), math.fsum(ds))
        )
    return points


def as_arrays(records: Sequence[CycleRecord]) -> dict[str, np.ndarray]:
    """Stack a run into arrays: per-cycle ``T`` and ``(K, n)`` node quantities."""
    out = {
        "T": np.array([r.T for r in records]),
        "t_start": np.array([r.t_start for r in records]),
    }
    for name in ("u", "w", "gamma", "u_next", "w_next"):
        out[name] = np.array([[getattr(nc, name) for nc in r.nodes] for r in records])
    return out


# --------------------------------------------------------------------------- oracle


def run_oracle(cfg: AnyConfig, dt: float, K: int, chunk: int = 1 << 15) -> list[CycleRecord]:
    """Forward-Euler integration of the fluid dynamics with event detection.

    State per cycle: batch queue ``delta``, node queues ``w`` and admission
    rates ``u``.  ``du/dt = alpha``, ``d delta/dt = lambda - sum(u)``,
    ``dw/dt = u - gamma``.  A clearance event is the first step at which
    ``delta`` crosses from positive to nonpositive; its time is placed by
    linear interpolation within that step.
    """
    vc = validate_config(cfg)
    lam = vc.lam
    alpha = vc.alpha
    beta = vc.beta
    u_event = vc.u0.copy()
    w = vc.w0.copy()
    t = 0.0
    records = []
    for k in range(K):
        repeats = 0
        # the batch queue can only refill if the backed-off rates leave room
        while lam - float(np.dot(beta, u_event)) <= 0:
            if vc.negative_cycle_policy is NegativeCyclePolicy.ERROR:
                raise NonPositiveCycle(0.0, f"cycle {k}: batch queue cannot refill")
            u_event = beta * u_event
            repeats += 1
        u = beta * u_event
        gamma = beta * u_event + np.sqrt(2.0 * alpha * np.maximum(w, 0.0))
        t_z = np.sqrt(2.0 * np.maximum(w, 0.0) / alpha)
        delta = 0.0
        admitted = np.zeros_like(w)
        w_start = w.copy()
        steps = 0
        idx = np.arange(chunk, dtype=float)
        while True:
            # u is affine in the step index, so Euler sums over a chunk are cumulative sums
            u_chunk = u[None, :] + alpha[None, :] * (idx[:, None] * dt)
            d_delta = (lam - u_chunk.sum(axis=1)) * dt
            delta_path = delta + np.cumsum(d_delta)
            prev = np.concatenate([[delta], delta_path[:-1]])
            crossed = np.nonzero((delta_path <= 0) & (prev > 0))[0]
            if len(crossed):
                j = int(crossed[0])
                dw = np.cumsum((u_chunk[: j + 1] - gamma[None, :]) * dt, axis=0)
                da = np.cumsum(u_chunk[: j + 1] * dt, axis=0)
                w_prev = w + (dw[j - 1] if j > 0 else 0.0)
                a_prev = admitted + (da[j - 1] if j > 0 else 0.0)
                theta = prev[j] / (prev[j] - delta_path[j])
                w = w_prev + theta * (u_chunk[j] - gamma) * dt
                admitted = a_prev + theta * u_chunk[j] * dt
                u_end = u_chunk[j] + theta * alpha * dt
                T = (steps + j + theta) * dt
                break
            w = w + np.sum((u_chunk - gamma[None, :]) * dt, axis=0)
            admitted = admitted + np.sum(u_chunk * dt, axis=0)
            delta = float(delta_path[-1])
            u = u + alpha * (chunk * dt)
            steps += chunk
        nodes = []
        for i, p in enumerate(vc.nodes):
            u_av = admitted[i] / T
            nodes.append(
                NodeCycle(
                    u=float(u_event[i]),
                    gamma=float(gamma[i]),
                    t_z=float(t_z[i]),
                    w=float(w_start[i]),
                    w_next=float(w[i]),
                    u_next=float(u_end[i]),
                    metrics=metrics.queueing_time(w_start[i], w[i], u_av, T, p.alpha)
                    if u_av > 0
                    else None,
                )
            )
        records.append(CycleRecord(k, t, t + T, T, tuple(nodes), repeats, 0.0))
        t += T
        u_event = u_end.copy()
    return records


def oracle_deviation(det: Sequence[CycleRecord], orc: Sequence[CycleRecord]) -> dict[str, float]:
    """Norm-wise relative deviation per quantity: max |a - b| / max |a| over the run."""
    a, b = as_arrays(det), as_arrays(orc)
    out = {}
    for name in ("T", "u", "w"):
        x, y = a[name], b[name]
        if x.size == 0:
            out[name] = 0.0
            continue
        scale = np.max(np.abs(x), axis=0)
        out[name] = float(np.max(np.max(np.abs(x - y), axis=0) / np.where(scale > 0, scale, 1.0)))
    return out


# --------------------------------------------------------------------------- stochastic


def exponential_stream(seed: int, rate: float):
    """Inter-arrival times from a counter-based generator via the inverse CDF."""
    gen = np.random.Generator(np.random.Philox(int(seed)))
    while True:
        for x in gen.random(4096):
            yield -math.log1p(-x) / rate


def run_stochastic(cfg: AnyConfig, s: StochasticConfig) -> StochasticRun:
    """Empirical mode with Poisson arrivals; no analytical guarantee applies.

    Arrivals are whole requests.  While the batch queue is nonempty, each node
    drains it as a fluid at its current admission rate.  A clearance event
    fires whenever the batch queue empties before the next arrival.  Node
    queues are served at the rate fixed at the opening event and floored at
    zero at the closing event.
    """
    vc = validate_config(cfg)
    alpha = vc.alpha
    beta = vc.beta
    A = float(alpha.sum())
    gaps = exponential_stream(s.seed, vc.lam)
    arrivals = []

    def open_cycle(u_event, w):
        gamma = np.array([allocation.service_rate(u_event[i], w[i], p).gamma for i, p in enumerate(vc.nodes)])
        return gamma

    u_event = vc.u0.copy()
    w = vc.w0.copy()
    gamma = open_cycle(u_event, w)
    t_k = 0.0
    t = 0.0
    delta = 0.0
    admitted = np.zeros_like(w)
    t_next = next(gaps)
    records = []
    k = 0
    while True:
        if delta <= 0.0:
            if t_next > s.horizon:
                break
            t = t_next
            arrivals.append(t)
            delta = 1.0
            t_next = t + next(gaps)
            continue
        rates = beta * u_event + alpha * (t - t_k)
        S0 = float(rates.sum())
        # time to drain delta at the ramping total rate: S0 h + A h^2 / 2 = delta
        h = 2.0 * delta / (S0 + math.sqrt(S0 * S0 + 2.0 * A * delta))
        if t + h <= t_next:
            t_c = t + h
            if t_c > s.horizon:
                break
            admitted += (rates + 0.5 * alpha * h) * h
            T = t_c - t_k
            nodes = []
            for i, p in enumerate(vc.nodes):
                u_av = admitted[i] / T
                w_next = max(0.0, w[i] + admitted[i] - gamma[i] * T)
                nodes.append(
                    NodeCycle(
                        u=float(u_event[i]),
                        gamma=float(gamma[i]),
                        t_z=math.sqrt(2.0 * w[i] / p.alpha),
                        w=float(w[i]),
                        w_next=w_next,
                        u_next=float(beta[i] * u_event[i] + alpha[i] * T),
                        metrics=metrics.queueing_time(w[i], w_next, u_av, T, p.alpha)
                        if u_av > 0
                        else None,
                    )
                )
            records.append(CycleRecord(k, t_k, t_c, T, tuple(nodes)))
            k += 1
            u_event = np.array([nc.u_next for nc in nodes])
            w = np.array([nc.w_next for nc in nodes])
            gamma = open_cycle(u_event, w)
            admitted = np.zeros_like(w)
            t_k = t = t_c
            delta = 0.0
        else:
            h = t_next - t
            if t_next > s.horizon:
                break
            admitted += (rates + 0.5 * alpha * h) * h
            delta = max(0.0, delta - (S0 * h + 0.5 * A * h * h)) + 1.0
            t = t_next
            arrivals.append(t)
            t_next = t + next(gaps)
    return StochasticRun(tuple(records), np.array(arrivals))


# --------------------------------------------------------------------------- batch


def run_many(fn: Callable, jobs: Iterable, workers: int | None = None) -> list:
    """Evaluate independent runs, optionally across processes; order is preserved."""
    jobs = list(jobs)
    if not workers or workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))
