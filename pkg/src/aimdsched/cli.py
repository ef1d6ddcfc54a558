"""Command-line front end: ``aimdsched {simulate,spectral,verify,stochastic,sweep}``.

Exit codes: 0 success (or certified), 1 a check failed, 2 usage or config error.
The default output directory is taken from ``$AIMDSCHED_OUT``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import allocation, engine, output
from .config import config_dict, config_hash, load_config
from .model import ConfigError, NonPositiveCycle, SystemConfig, fixed_point, validate_config
from .spectral import SpectralError, spectral_report

ENV_OUT = "AIMDSCHED_OUT"
DEFAULT_OUT = "aimdsched-out"
CONVERGENCE_TOL = 1e-3


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(ENV_OUT) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _equilibrium_payload(cfg: SystemConfig) -> dict:
    eq = fixed_point(cfg)
    return {
        "t_star": eq.t_star,
        "u_star": list(eq.u_star),
        "w_star": list(eq.w_star),
        "invariant_sets_at_t_star": [
            [s.lower, s.upper] for s in (allocation.invariant_set(eq.t_star, p) for p in cfg.nodes)
        ],
    }


def events_to_converge(records, cfg, tol: float = CONVERGENCE_TOL):
    """First event index with ``|U(k) - u*| / |u*| < tol``, and the time it occurs."""
    if not records:
        return None, None
    u_star = np.array(fixed_point(cfg).u_star)
    U = [np.array([nc.u for nc in r.nodes]) for r in records]
    U.append(np.array([nc.u_next for nc in records[-1].nodes]))
    times = [r.t_start for r in records] + [records[-1].t_end]
    for k, (u, t) in enumerate(zip(U, times)):
        if np.linalg.norm(u - u_star) / np.linalg.norm(u_star) < tol:
            return k, t
    return None, None


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    validate_config(cfg)
    out = _out_dir(args)
    names = ("cycles.csv", "trace.csv", "report.json")
    manifest = output.RunManifest(config_hash(cfg), "simulate", outputs=names)
    records = engine.run_deterministic(cfg, args.cycles)
    output.write_cycles_csv(out / names[0], manifest, records)
    points = (pt for rec in records for pt in engine.reconstruct_trace(rec, cfg, args.trace_samples))
    output.write_trace_csv(out / names[1], manifest, points)
    problems = output.validate_cycles_csv(out / names[0], cfg.lam)
    residual = max(
        (abs(math.fsum(nc.metrics.u_av for nc in r.nodes) - cfg.lam) for r in records), default=0.0
    )
    k_conv, t_conv = events_to_converge(records, cfg)
    report = {
        "config": config_dict(cfg),
        "cycles": len(records),
        "t_star_empirical": records[-1].T if records else None,
        **_equilibrium_payload(cfg),
        "events_to_converge": k_conv,
        "max_conservation_residual": residual,
        "backoff_repeats": sum(r.backoff_repeats for r in records),
        "spectral": spectral_report(cfg).to_dict(),
        "validation": {"ok": not problems, "problems": problems},
    }
    output.write_json(out / names[2], manifest, report)
    print(f"wrote {len(records)} cycles to {out}")
    for msg in problems:
        print(f"validation: {msg}", file=sys.stderr)
    return 1 if problems else 0


def cmd_spectral(args) -> int:
    cfg = load_config(args.config)
    try:
        rep = spectral_report(cfg)
    except SpectralError as exc:
        print(f"spectral solver diagnostic: {exc}", file=sys.stderr)
        return 1
    payload = {"config": config_dict(cfg), "spectral": rep.to_dict()}
    manifest = output.RunManifest(config_hash(cfg), "spectral", outputs=("report.json",))
    if args.out or os.environ.get(ENV_OUT):
        output.write_json(_out_dir(args) / "report.json", manifest, payload)
    print(json.dumps({"manifest": manifest.to_dict(), **payload}, indent=2, sort_keys=True))
    return 0 if rep.schur else 1


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    validate_config(cfg)
    det = engine.run_deterministic(cfg, args.cycles)
    orc = engine.run_oracle(cfg, args.dt, args.cycles)
    dev = engine.oracle_deviation(det, orc)
    for name, val in dev.items():
        print(f"max relative deviation {name}: {val:.3e}")
    worst = max(dev, key=dev.get) if dev else None
    if worst is not None and dev[worst] > args.tol:
        print(f"FAIL: {worst} deviates by {dev[worst]:.3e} > {args.tol:g} at dt={args.dt:g}")
        return 1
    print(f"PASS: all deviations within {args.tol:g} over {args.cycles} cycles")
    return 0


def cmd_stochastic(args) -> int:
    cfg = load_config(args.config)
    validate_config(cfg)
    out = _out_dir(args)
    names = ("cycles.csv", "arrivals.csv", "report.json")
    manifest = output.RunManifest(config_hash(cfg), "stochastic", seed=args.seed, outputs=names)
    run = engine.run_stochastic(cfg, engine.StochasticConfig(args.seed, args.horizon))
    output.write_cycles_csv(out / names[0], manifest, run.records)
    output.write_rows_csv(out / names[1], manifest, ["t"], ((t,) for t in run.arrivals))
    problems = output.validate_cycles_csv(out / names[0], cfg.lam, conservation=False)
    n_arr = len(run.arrivals)
    report = {
        "config": config_dict(cfg),
        "seed": args.seed,
        "horizon": args.horizon,
        "arrivals": n_arr,
        "mean_interarrival": run.mean_interarrival if n_arr else None,
        "expected_interarrival": 1.0 / cfg.lam,
        "cycles": len(run.records),
        "mean_cycle_period": run.mean_cycle_period if run.records else None,
        "t_star": fixed_point(cfg).t_star,
        "validation": {"ok": not problems, "problems": problems},
    }
    output.write_json(out / names[2], manifest, report)
    print(f"wrote {len(run.records)} cycles and {n_arr} arrivals to {out}")
    return 1 if problems else 0


def _swept(cfg: SystemConfig, param: str, value: float) -> SystemConfig:
    if param == "alpha-scale":
        nodes = tuple(dataclasses.replace(p, alpha=p.alpha * value) for p in cfg.nodes)
        return dataclasses.replace(cfg, nodes=nodes)
    if param == "beta":
        return dataclasses.replace(cfg, nodes=tuple(dataclasses.replace(p, beta=value) for p in cfg.nodes))
    if param == "lambda":
        return dataclasses.replace(cfg, lam=value)
    raise ValueError(param)


SWEEP_COLUMNS = [
    "param", "value", "t_star", "spectral_radius", "schur",
    "events_to_converge", "time_to_converge", "final_T",
]


def sweep_point(cfg: SystemConfig, param: str, value: float, cycles: int) -> tuple:
    c = _swept(cfg, param, value)
    validate_config(c)
    rep = spectral_report(c)
    records = engine.run_deterministic(c, cycles)
    k_conv, t_conv = events_to_converge(records, c)
    return (
        param, value, fixed_point(c).t_star, rep.spectral_radius, int(rep.schur),
        k_conv, t_conv, records[-1].T if records else None,
    )


def parse_range(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num)).tolist()
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    validate_config(cfg)
    try:
        values = parse_range(args.range)
    except ValueError as exc:
        raise ConfigError([f"bad --range {args.range!r}: {exc}"]) from exc
    out = _out_dir(args)
    manifest = output.RunManifest(config_hash(cfg), "sweep", outputs=("summary.csv",))
    rows = engine.run_many(sweep_point, [(cfg, args.param, v, args.cycles) for v in values], args.jobs)
    output.write_rows_csv(out / "summary.csv", manifest, SWEEP_COLUMNS, rows)
    print(f"wrote {len(rows)} sweep points to {out / 'summary.csv'}")
    return 0 if all(row[4] for row in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aimdsched", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="deterministic run: cycles.csv, trace.csv, report.json")
    p.add_argument("config")
    p.add_argument("--cycles", type=int, default=30)
    p.add_argument("--trace-samples", type=int, default=21)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectral", help="eigenvalues and Schur certificate of the aggregate map")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("verify", help="compare the closed-form run with the Euler oracle")
    p.add_argument("config")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--cycles", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stochastic", help="Poisson-arrival run (empirical only)")
    p.add_argument("config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stochastic)

    p = sub.add_parser("sweep", help="parameter study: summary.csv")
    p.add_argument("config")
    p.add_argument("--param", choices=["alpha-scale", "beta", "lambda"], required=True)
    p.add_argument("--range", default="", help="comma list (1,2,4) or start:stop:num")
    p.add_argument("--cycles", type=int, default=60)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    except NonPositiveCycle as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
