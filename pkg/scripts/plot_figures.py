"""Render cycle-period, rate, queue and queueing-time plots from a simulate output directory.

Needs matplotlib (``pip install -e .[plot]``).
"""
import argparse
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from aimdsched.output import read_csv


def by_node(rows, x, y):
    out = defaultdict(lambda: ([], []))
    for r in rows:
        xs, ys = out[r["node"]]
        xs.append(float(r[x]))
        ys.append(float(r[y]))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir", nargs="?", default="results/table1")
    args = ap.parse_args()
    run = Path(args.run_dir)
    cycles = read_csv(run / "cycles.csv")
    trace = read_csv(run / "trace.csv")

    node1 = [r for r in cycles if r["node"] == "1"]
    panels = [
        ("cycle_period.png", "cycle k", "T(k) [s]", {"T": ([int(r["k"]) for r in node1], [float(r["T"]) for r in node1])}),
        ("admission_rates.png", "t [s]", "u_i(t) [req/s]", by_node(trace, "t", "u_tau")),
        ("node_queues.png", "t [s]", "w_i(t) [req]", by_node(trace, "t", "w_tau")),
        ("batch_share.png", "t [s]", "delta_i(t) [req]", by_node(trace, "t", "delta_i_tau")),
        ("service_rates.png", "cycle k", "gamma_i(k) [req/s]", by_node(cycles, "k", "gamma")),
        ("queueing_time.png", "cycle k", "T_i(k) [s]", by_node(cycles, "k", "t_total")),
    ]
    for name, xlabel, ylabel, series in panels:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for label, (xs, ys) in sorted(series.items()):
            ax.plot(xs, ys, label=f"node {label}" if label != "T" else label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(run / name, dpi=120)
        plt.close(fig)
        print(f"wrote {run / name}")


if __name__ == "__main__":
    main()
