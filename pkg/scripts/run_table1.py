"""Deterministic run of the bundled four-node setup, with the figure data and a summary."""
import argparse
import sys

from aimdsched import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cycles", type=int, default=30)
    ap.add_argument("--trace-samples", type=int, default=41)
    ap.add_argument("--out", default="results/table1")
    args = ap.parse_args()
    code = cli.main(
        ["simulate", "table1.cfg", "--cycles", str(args.cycles),
         "--trace-samples", str(args.trace_samples), "--out", args.out]
    )
    if code == 0:
        code = cli.main(["spectral", "table1.cfg", "--out", args.out + "/spectral"])
    return code


if __name__ == "__main__":
    sys.exit(main())
