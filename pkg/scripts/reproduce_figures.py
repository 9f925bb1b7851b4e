"""Write every figure preset as CSV into an output directory.

    python scripts/reproduce_figures.py --out results/ --trials 20
"""

import argparse
import pathlib
import sys
import time

from skilltext.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results"))
    ap.add_argument("--trials", type=int, default=100, help="Monte Carlo trials for figure 7")
    ap.add_argument("--figures", default="5,6,7,8,9,10")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    status = 0
    for fig in args.figures.split(","):
        t0 = time.perf_counter()
        dest = args.out / f"figure{fig}.csv"
        code = run(["figure", fig, "--trials", str(args.trials), "--output", str(dest)])
        print(f"figure {fig}: {dest} ({time.perf_counter() - t0:.1f}s, exit {code})")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
