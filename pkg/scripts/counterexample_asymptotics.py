"""Table of cubic H^s norms for the stationary hyperbolic data.

Prints the local slopes between consecutive N next to the normalized ratio
so the approach to the asymptotic exponent d + s is visible.
"""
import argparse
import math

from dlab.counterexamples import VARIANTS, counterexample_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--variant", choices=sorted(VARIANTS), default="hyperbolic_2d")
    ap.add_argument("--s", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    ap.add_argument("--N", type=int, nargs="+", default=[2, 4, 8, 16, 32, 64, 128, 256])
    args = ap.parse_args()
    d = VARIANTS[args.variant]
    for s in args.s:
        rows, fit = counterexample_sweep(args.variant, s, args.N)
        print(f"# {args.variant} s={s:g}  target {d + s:g}  fit {fit.slope:.4f} +- {fit.stderr:.4f}")
        print(f"{'N':>5} {'cubic_Hs':>14} {'ratio':>10} {'local':>8}")
        prev = None
        for r in rows:
            local = "" if prev is None else f"{math.log(r.cubic_hs_norm / prev.cubic_hs_norm) / math.log(r.N / prev.N):8.4f}"
            print(f"{r.N:5d} {r.cubic_hs_norm:14.6g} {r.ratio:10.5f} {local}")
            prev = r
        print()


if __name__ == "__main__":
    main()
