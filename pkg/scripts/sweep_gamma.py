"""Condition integrals and solution size of the single-term instance as gamma varies."""

import argparse

from sublinear_riesz.conditions import condition_report
from sublinear_riesz.fixtures import single_term_problem
from sublinear_riesz.solver import solve_minimal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--values", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--cells", type=int, default=32)
    args = ap.parse_args()
    print(f"{'gamma':>6} {'r':>8} {'sigma_int':>12} {'omega_int':>12} {'cross_int':>12} {'lorentz':>12} {'iters':>6}")
    for g in args.values:
        p = single_term_problem(args.cells, gamma=g)
        rep = condition_report(p)
        _, srep = solve_minimal(p)
        print(f"{g:6.2f} {float(rep.solution_pair.r):8.3f} {rep.sigma_integrals[0]:12.5g} "
              f"{rep.omega_integral:12.5g} {rep.cross_integrals[0]:12.5g} {srep.lorentz_norm:12.5g} {srep.iterate_count:6d}")


if __name__ == "__main__":
    main()
