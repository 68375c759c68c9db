"""Decay rates of every bundled scenario next to the two kappa thresholds.

For each scenario: sampled kappa, fitted level-0 rate, action slope, and
whether the rate clears kappa/3 and 0.95 kappa/2.  Prints a table and
writes out/decay_table.csv.
"""

import argparse
from pathlib import Path

from scflow import analysis as an
from scflow.cli import write_csv
from scflow.scenarios import bundled_scenarios


def main() -> None:
    ap = argparse.ArgumentParser(description="decay rates versus kappa thresholds")
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epsilon", type=float, default=1e-3)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()

    rows = []
    for name, sc in bundled_scenarios(args.N).items():
        if name == "zero":
            continue
        traj = sc.run()
        k = an.estimate_kappa(sc.functional, sc.target, args.epsilon, 10, seed=args.seed).kappa
        rate = an.fit_decay(traj, sc.target).rate
        slope = -an.fit_action_decay(traj, sc.target)[0]
        rows.append((name, k, k / 3.0, k / 2.0, rate, slope, rate > k / 3.0, rate > 0.95 * k / 2.0))

    header = ["scenario", "kappa_est", "kappa_third", "kappa_half", "rate", "action_slope", "above_third", "above_half"]
    print(f"{'scenario':<20}{'kappa':>10}{'k/3':>10}{'k/2':>10}{'rate':>10}{'A slope':>10}")
    for r in rows:
        print(f"{r[0]:<20}{r[1]:>10.5f}{r[2]:>10.5f}{r[3]:>10.5f}{r[4]:>10.5f}{r[5]:>10.5f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "decay_table.csv", header, rows)


if __name__ == "__main__":
    main()
