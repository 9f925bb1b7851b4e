"""Compare SCNS Monte Carlo against density evolution along an R sweep."""

import argparse

import numpy as np

from skilltext import SingleClassConfig, de_solve_single, psi_one_skill
from skilltext.peeling import run_trials


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=3.0)
    ap.add_argument("--total-nodes", type=int, default=20_000)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--R", default="0.25:3:0.25", help="start:stop:step")
    args = ap.parse_args()
    start, stop, step = map(float, args.R.split(":"))
    print("R,zeta_de,zeta_sim,epsilon_de,epsilon_sim")
    for i, R in enumerate(np.arange(start, stop + step / 2, step)):
        cfg = SingleClassConfig(int(round(args.total_nodes / (1 + R))), float(R), args.c, seed=i)
        frac, err, _ = run_trials(cfg, psi_one_skill(), args.trials, test_texts=10_000)
        de = de_solve_single(args.c, R)
        print(f"{R:.2f},{float(de.zeta):.4f},{frac.mean():.4f},{float(de.epsilon):.4f},{err.mean():.4f}")


if __name__ == "__main__":
    main()
