"""Normalized L^p norms of the dyadic families against the predicted exponent."""
import argparse
import math

from dlab.exponents import FAMILIES, SweepConfig, linear_strichartz_sweep, predicted_linear_exponent
from dlab.phase import PhaseFunction


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--phase", choices=["schrodinger", "fractional", "hyperbolic"], default="fractional")
    ap.add_argument("--a", type=float, default=1.5)
    ap.add_argument("--p", type=float, default=6)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--N", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    ap.add_argument("--families", nargs="+", default=["flat_annulus", "random_phase"], choices=FAMILIES)
    args = ap.parse_args()
    phi = {"schrodinger": PhaseFunction.quadratic(1),
           "fractional": PhaseFunction.fractional(args.a),
           "hyperbolic": PhaseFunction.quadratic(1, -1)}[args.phase]
    pred = predicted_linear_exponent(phi, args.p)
    print(f"# predicted exponent {pred.total:.4f} (curvature part {pred.curvature_loss:.4f})")
    for fam in args.families:
        res = linear_strichartz_sweep(SweepConfig(phi, args.p, (0.0, args.T), tuple(args.N), fam))
        print(f"## {fam}: slope {res.slope:.4f} +- {res.fit.stderr:.4f}")
        for r in res.rows:
            print(f"{r.N:5d} {r.norm:14.6g} {math.exp(r.log_normalized):10.5f} nodes={r.time_nodes}")


if __name__ == "__main__":
    main()
