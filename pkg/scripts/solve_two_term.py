"""Solve the two-term 64x64 instance and print the iteration record."""

import argparse

from sublinear_riesz.fixtures import two_term_problem
from sublinear_riesz.solver import solve_minimal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--tol", type=float, default=1e-8)
    args = ap.parse_args()
    p = two_term_problem(args.cells)
    u, rep = solve_minimal(p, args.tol, max_iter=200)
    for j, r in enumerate(rep.residual_history, 1):
        print(f"{j:4d}  {r:.3e}")
    print(f"converged={rep.converged} iterations={rep.iterate_count} residual={rep.final_residual_fp:.3e}")
    print(f"kappas={rep.kappas}  norms={rep.norms}  lorentz_norm={rep.lorentz_norm:.6g}  max u={u.values.max():.6g}")


if __name__ == "__main__":
    main()
