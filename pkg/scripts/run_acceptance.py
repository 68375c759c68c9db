"""Run the acceptance criteria and write a CSV summary.

    python3 scripts/run_acceptance.py [--only 1,3,7] [--seed 0] [--out out/acceptance]
"""

import argparse
import sys
from pathlib import Path

from scflow.acceptance import run_criteria
from scflow.cli import write_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", default=None, help="comma-separated criterion ids")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/acceptance")
    args = ap.parse_args()
    ids = [int(t) for t in args.only.split(",")] if args.only else None
    results = run_criteria(ids, seed=args.seed)
    for r in results:
        print(r.line())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "acceptance.csv",
        ["id", "name", "value", "threshold", "passed", "runtime_s"],
        [(r.id, r.name, r.value, r.threshold, r.passed, round(r.runtime, 3)) for r in results],
    )
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
