"""Fitted error exponents for interpolation kernels and QMC, reported without a verdict.

The reference values printed alongside (linear about 1/2, TPS in 2D about 1)
are the conjectured ones; MQ has no reference value.
"""
import argparse
from pathlib import Path

from rbfqmc.studies import (ConvergenceConfig, fit_error_exponent, run_convergence,
                            write_fit_csv, write_study_csv)

CELLS = [
    ("interp", "sin-square", "linear", "0.5"),
    ("interp", "sin-square", "tps", "1"),
    ("interp", "sin-square", "mq:0.2", "-"),
    ("drm", "gaussian-bump-square", "tps", "1"),
    ("qmc", "const1-disk", "tps", "1"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", default="64,128,256,512,1024")
    ap.add_argument("--strategy", default="halton")
    ap.add_argument("--out", default="results/conjecture.csv")
    args = ap.parse_args()
    ms = tuple(int(v) for v in args.m.split(","))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    records, fits = [], {}
    for method, problem, kernel, ref in CELLS:
        recs = run_convergence(ConvergenceConfig(method, problem, ms, args.strategy, kernel))
        records += recs
        fit = fit_error_exponent(recs, recs[0].d)
        fits[f"{method}:{problem}:{args.strategy}:{recs[0].kernel}"] = fit
        print(f"{method:6s} {problem:22s} {kernel:8s} eta {fit.eta:6.3f} "
              f"r2 {fit.r_squared:.3f} (conjectured {ref})")
    write_study_csv(records, out)
    write_fit_csv(fits, out.with_name(out.stem + "_fit.csv"))
    print(f"rows -> {out}")


if __name__ == "__main__":
    main()
