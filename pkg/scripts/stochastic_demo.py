"""Poisson arrivals over several seeds: mean inter-arrival and mean cycle period vs T*."""
import argparse

import numpy as np

from aimdsched.config import load_config
from aimdsched.engine import StochasticConfig, run_many, run_stochastic
from aimdsched.model import fixed_point


def summarize(cfg, seed, horizon):
    run = run_stochastic(cfg, StochasticConfig(seed, horizon))
    periods = np.array([r.T for r in run.records])
    return seed, len(run.arrivals), run.mean_interarrival, len(periods), periods.mean(), np.median(periods)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default="table1.cfg")
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--horizon", type=float, default=2000.0)
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()

    cfg = load_config(args.config)
    t_star = fixed_point(cfg).t_star
    rows = run_many(summarize, [(cfg, s, args.horizon) for s in range(args.seeds)], args.jobs)
    print(f"{'seed':>4} {'arrivals':>9} {'mean gap':>10} {'cycles':>7} {'mean T':>8} {'median T':>9} {'rel err':>8}")
    for seed, n_arr, gap, n_cyc, mean_T, med_T in rows:
        print(f"{seed:>4} {n_arr:>9} {gap:>10.6f} {n_cyc:>7} {mean_T:>8.4f} {med_T:>9.4f} {abs(mean_T - t_star) / t_star:>8.3%}")
    print(f"T* = {t_star:.4f}, expected gap = {1 / cfg.lam:.6f}")


if __name__ == "__main__":
    main()
