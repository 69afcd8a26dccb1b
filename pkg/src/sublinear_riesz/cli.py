"""Command-line entry point: solve, check, verify, sweep.

Exit codes: 0 success, 1 usage or configuration error, 2 no convergence,
3 a condition is violated.
"""

from __future__ import annotations

import argparse
import copy
import sys
from pathlib import Path

import numpy as np

from .conditions import condition_report, two_weight_check
from .config import ConfigError, ZeroDataError, config_from_dict, load_config
from .core import GridFunction
from .energy import energy_identity_check
from .estimates import bilateral_bracket, iterated_check, key_lorentz_check
from .io import format_float, read_grid_function, read_json, write_csv, write_grid_function, write_json
from .kernels import check_quasi_symmetry, check_wmp_empirical
from .solver import DegenerateInstanceError, discretize, norm_bound, solve_minimal

EXIT_OK, EXIT_CONFIG, EXIT_NO_CONVERGENCE, EXIT_CONDITION = 0, 1, 2, 3
SLACK = 1e-9


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load(path):
    """(config, exit code); the config is None when loading failed."""
    try:
        return load_config(path), EXIT_OK
    except ZeroDataError as exc:
        _err(str(exc))
        return None, EXIT_CONDITION
    except ConfigError as exc:
        _err(str(exc))
        return None, EXIT_CONFIG


def _conditions(cfg):
    rep = condition_report(cfg.problem)
    doc = rep.to_dict()
    p = cfg.problem
    doc["two_weight"] = []
    if not p.kernel.is_matrix:
        for s, q in p.terms:
            tw = two_weight_check(s, p.omega, q, p.gamma, p.kernel)
            doc["two_weight"].append({"lhs": tw.lhs, "rhs": tw.rhs, "ratio": tw.ratio, "degenerate": tw.degenerate})
    return rep, doc


def _write_solution(out: Path, p, u) -> None:
    if isinstance(u, GridFunction):
        write_grid_function(out / "solution.json", u)
    else:
        d = discretize(p)
        write_json(out / "solution_nodes.json", {"nodes": d.nodes, "values": np.asarray(u)})


def _read_solution(out: Path):
    if (out / "solution.json").exists():
        return read_grid_function(out / "solution.json")
    if (out / "solution_nodes.json").exists():
        return np.asarray(read_json(out / "solution_nodes.json")["values"], dtype=float)
    return None


def cmd_solve(args) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    p = cfg.problem
    try:
        rep_c, cond = _conditions(cfg)
        if not rep_c.verdict:
            print("warning: a condition integral is infinite; solving anyway", file=sys.stderr)
        u, rep = solve_minimal(p, cfg.tol, cfg.max_iter)
    except DegenerateInstanceError as exc:
        _err(str(exc))
        return EXIT_CONDITION
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    out = cfg.out_dir
    _write_solution(out, p, u)
    write_json(out / "solve_report.json", rep.to_dict() | {"seed": cfg.seed, "config": cfg.raw})
    write_json(out / "conditions.json", cond)
    status = "converged" if rep.converged else "not converged"
    print(f"{status}: {rep.iterate_count} iterations, fixed-point residual {format_float(rep.final_residual_fp)}")
    return EXIT_OK if rep.converged else EXIT_NO_CONVERGENCE


def cmd_check(args) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    try:
        rep, doc = _conditions(cfg)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    write_json(cfg.out_dir / "conditions.json", doc)
    for i, v in enumerate(rep.sigma_integrals):
        print(f"sigma_{i + 1} integral  {format_float(v)}")
    print(f"omega integral    {format_float(rep.omega_integral)}")
    for i, v in enumerate(rep.cross_integrals):
        print(f"cross_{i + 1} integral  {format_float(v)}")
    print("verdict: all finite" if rep.verdict else "verdict: condition violated")
    return EXIT_OK if rep.verdict else EXIT_CONDITION


def _estimate_rows(p, u) -> list[tuple[str, float, bool]]:
    rows = []
    d = discretize(p)
    v = np.asarray(u.values if isinstance(u, GridFunction) else u, dtype=float)
    fin = np.isfinite(v)
    h = p.kernel.wmp_h
    for i, q in enumerate(p.qs):
        gs = d.sigma_potential(i)
        lower = (1 - q) ** (1 / (1 - q)) * h ** (-q / (1 - q)) * gs ** (1 / (1 - q))
        viol = float(np.max((lower[fin] - v[fin]) / np.maximum(v[fin], 1e-300)))
        rows.append((f"lower_bound_{i + 1}", viol, viol <= SLACK))
        s = p.sigmas[i]
        if s.density is not None and not s.has_atoms and not s.is_zero:
            for a in (0.5, 2.0, 3.0):
                viol = iterated_check(s, a, p.kernel)
                rows.append((f"iterated_{i + 1}_a{a:g}", viol, viol <= SLACK))
            kl = key_lorentz_check(s, 1.0, p.kernel)
            rows.append((f"key_lorentz_ratio_{i + 1}", kl.ratio, bool(np.isfinite(kl.ratio))))
    nb = norm_bound(p, u)
    rows.append(("norm_bound_slack", max(1.0, nb.bound) - max(nb.norms), nb.holds))
    if len(p.terms) == 1 and not p.kernel.is_matrix and not p.sigmas[0].is_zero:
        br = bilateral_bracket(u, p)
        rows.append(("bracket_c_low", br.c_low, br.c_low > 0))
        rows.append(("bracket_c_up", br.c_up, bool(np.isfinite(br.c_up))))
    return rows


def _axiom_rows(p, seed: int) -> list[tuple[str, float, bool]]:
    k = p.kernel
    rng = np.random.default_rng(seed)
    if k.is_matrix:
        pts = k.variant.points
        pairs = [(pts[i], pts[j]) for i in range(len(pts)) for j in range(len(pts)) if i != j]
        probes = pts
    else:
        grid = p.grid
        centers = grid.centers()[k.interior(grid.centers())]
        idx = rng.choice(len(centers), size=(50, 2))
        pairs = [(centers[a], centers[b]) for a, b in idx if a != b]
        probes = centers[:: max(1, len(centers) // 400)]
    rows = [("quasi_symmetry", check_quasi_symmetry(k, pairs), True)]
    rows[0] = (rows[0][0], rows[0][1], rows[0][1] <= k.quasi_sym_a * (1 + 1e-12))
    sigma = next((s for s in p.sigmas if not s.is_zero), p.omega)
    verdict = check_wmp_empirical(k, sigma, probes)
    rows.append(("wmp_probe_over_support", verdict.sup_on_probes / verdict.sup_on_support, verdict.holds))
    return rows


def cmd_verify(args) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    p = cfg.problem
    u = _read_solution(cfg.out_dir)
    if u is None:
        _err(f"no solution artifact found in {cfg.out_dir}")
        return EXIT_CONFIG
    selected = [name for name in ("estimates", "energy", "kernel_axioms") if getattr(args, name)]
    selected = selected or ["estimates", "energy", "kernel_axioms"]
    if "energy" in selected and p.gamma != 1:
        _err("energy identity requires gamma = 1")
        return EXIT_CONFIG
    rows = []
    report = {}
    try:
        if "estimates" in selected:
            rows += _estimate_rows(p, u)
        if "energy" in selected:
            e = energy_identity_check(p, u)
            report["energy"] = e.to_dict()
            rows.append(("energy_identity_gap", e.relative_gap, e.relative_gap <= 0.05))
        if "kernel_axioms" in selected:
            rows += _axiom_rows(p, cfg.seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    report["checks"] = [{"name": n, "value": v, "pass": ok} for n, v, ok in rows]
    write_json(cfg.out_dir / "verify.json", report)
    width = max(len(n) for n, _, _ in rows)
    for n, v, ok in rows:
        print(f"{n:<{width}}  {format_float(v):>24}  {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all(ok for _, _, ok in rows) else EXIT_CONDITION


def _with_param(raw: dict, param: str, value: float) -> dict:
    raw = copy.deepcopy(raw)
    if param == "gamma":
        raw["gamma"] = value
    elif param == "q":
        for t in raw["terms"]:
            t["q"] = value
    elif param == "alpha":
        raw["kernel"]["alpha"] = value
    return raw


def cmd_sweep(args) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    if not args.values:
        _err("--values needs at least one value")
        return EXIT_CONFIG
    if args.param == "alpha" and cfg.problem.kernel.is_matrix:
        _err("alpha sweeps need a Riesz kernel")
        return EXIT_CONFIG
    m = len(cfg.problem.terms)
    header = (["param", "value", "r", "rho"] + [f"sigma_integral_{i + 1}" for i in range(m)]
              + ["omega_integral"] + [f"cross_integral_{i + 1}" for i in range(m)]
              + ["verdict", "converged", "iterations", "final_residual", "lorentz_norm"])
    rows = []
    for value in args.values:
        try:
            run = config_from_dict(_with_param(cfg.raw, args.param, value), cfg.base_dir)
            rep = condition_report(run.problem)
            u, srep = solve_minimal(run.problem, run.tol, run.max_iter)
        except (ValueError, FloatingPointError) as exc:
            _err(f"{args.param} = {value}: {exc}")
            return EXIT_CONFIG
        pair = rep.solution_pair
        rows.append([args.param, value,
                     float(pair.r) if pair else float("nan"), float(pair.rho) if pair else float("nan"),
                     *rep.sigma_integrals, rep.omega_integral, *rep.cross_integrals,
                     rep.verdict, srep.converged, srep.iterate_count, srep.final_residual_fp,
                     float("nan") if srep.lorentz_norm is None else srep.lorentz_norm])
    out = Path(args.out) if args.out else cfg.out_dir / f"sweep_{args.param}.csv"
    write_csv(out, header, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sublinear-riesz", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="construct the minimal solution")
    s.add_argument("config")
    s.set_defaults(func=cmd_solve)
    c = sub.add_parser("check", help="evaluate the existence conditions")
    c.add_argument("config")
    c.set_defaults(func=cmd_check)
    v = sub.add_parser("verify", help="check inequalities on a stored solution")
    v.add_argument("config")
    v.add_argument("--estimates", action="store_true")
    v.add_argument("--energy", action="store_true")
    v.add_argument("--kernel-axioms", dest="kernel_axioms", action="store_true")
    v.set_defaults(func=cmd_verify)
    w = sub.add_parser("sweep", help="tabulate conditions and solves across a parameter")
    w.add_argument("config")
    w.add_argument("--param", choices=["gamma", "q", "alpha"], required=True)
    w.add_argument("--values", type=float, nargs="*", default=[])
    w.add_argument("--out", help="CSV path (default: out_dir/sweep_<param>.csv)")
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
