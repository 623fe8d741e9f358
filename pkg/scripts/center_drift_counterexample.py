#!/usr/bin/env python3
"""Show that a shifted (non-symmetric) interaction makes the center run off:
its track grows like log t instead of converging.

Prints the per-replica regression slope of the center against log t.
"""

import argparse

import numpy as np

from selfattract import counterexample_system


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-end", type=float, default=1e5)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--replicas", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    slopes = []
    for r in range(args.replicas):
        ts, _, cs = counterexample_system(args.t_end, args.dt, args.seed + r)
        mask = ts >= min(100.0, args.t_end / 10)
        slope = np.polyfit(np.log(ts[mask]), cs[mask], 1)[0]
        slopes.append(slope)
        print(f"replica {r}: slope {slope:.4f}, final center {cs[-1]:.2f}")
    print(f"mean slope: {np.mean(slopes):.4f} (log-drift predicts 1.0)")


if __name__ == "__main__":
    main()
