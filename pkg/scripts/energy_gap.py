"""Energy identity gap under grid refinement (gamma = 1)."""

import argparse

from sublinear_riesz.energy import energy_identity_check
from sublinear_riesz.fixtures import single_term_problem
from sublinear_riesz.solver import solve_minimal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, nargs="+", default=[16, 24, 32, 48])
    args = ap.parse_args()
    print(f"{'cells':>6} {'seminorm_sq':>14} {'rhs':>14} {'gap':>10}")
    for c in args.cells:
        p = single_term_problem(c)
        u, _ = solve_minimal(p)
        e = energy_identity_check(p, u)
        print(f"{c:6d} {e.seminorm_sq:14.6g} {e.rhs_identity:14.6g} {e.relative_gap:10.3e}")


if __name__ == "__main__":
    main()
