"""Detection-efficiency threshold versus state angle.

Usage: python3 scripts/threshold_scan.py [--points 12] [--min-angle 0.01] [--csv out.csv]
"""

import argparse
import math
import time

import numpy as np

from kaonbell.inequalities import efficiency_scan
from kaonbell.report import to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--min-angle", type=float, default=0.01)
    ap.add_argument("--csv", help="write (theta, threshold_eta) here")
    args = ap.parse_args()

    angles = np.geomspace(math.pi / 4, args.min_angle, args.points)
    t0 = time.perf_counter()
    results = efficiency_scan(angles)
    elapsed = time.perf_counter() - t0

    print(f"{'theta':>10} {'threshold':>10} {'CH at eta':>12}")
    for r in results:
        print(f"{r.state_angle:10.5f} {r.threshold_eta:10.5f} {r.ch_value_at_eta:12.3e}")
    print(f"\ninfimum over scan: {min(r.threshold_eta for r in results):.5f} (limit 2/3 = {2 / 3:.5f})")
    print(f"{len(results)} angles in {elapsed:.1f} s")

    if args.csv:
        rows = [{"theta": r.state_angle, "threshold_eta": r.threshold_eta} for r in results]
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(["theta", "threshold_eta"], rows))


if __name__ == "__main__":
    main()
