"""Deviation of the Euler oracle from the closed-form run as the step shrinks."""
import argparse

from aimdsched.config import load_config
from aimdsched.engine import oracle_deviation, run_deterministic, run_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default="table1.cfg")
    ap.add_argument("--cycles", type=int, default=20)
    ap.add_argument("--steps", default="2e-4,1e-4,5e-5,2.5e-5,1e-5")
    args = ap.parse_args()

    cfg = load_config(args.config)
    det = run_deterministic(cfg, args.cycles)
    print(f"{'dt':>9} {'T':>10} {'u':>10} {'w':>10}")
    for dt in map(float, args.steps.split(",")):
        dev = oracle_deviation(det, run_oracle(cfg, dt, args.cycles))
        print(f"{dt:>9.1e} {dev['T']:>10.3e} {dev['u']:>10.3e} {dev['w']:>10.3e}")


if __name__ == "__main__":
    main()
