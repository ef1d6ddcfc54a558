"""Growth-rate aggressiveness: scale every alpha and record how fast the rates settle."""
import argparse
import sys

from aimdsched import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--range", default="0.5,1,2,4,8")
    ap.add_argument("--out", default="results/alpha_sweep")
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()
    code = cli.main(
        ["sweep", "table1.cfg", "--param", "alpha-scale", "--range", args.range,
         "--jobs", str(args.jobs), "--out", args.out]
    )
    print((open(f"{args.out}/summary.csv").read()))
    return code


if __name__ == "__main__":
    sys.exit(main())
