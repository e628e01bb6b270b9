"""Grid search for the shipped regularization weights.

For each scenario, runs PALMNUT on the seeded default instance for every
``(lambda1, lambda2)`` pair on a logarithmic grid and reports the pair with
the smallest final NRMSE. Runs that fail numerically or end non-finite are
skipped. With ``--stability-iter`` the ranked candidates are rerun for that
many iterations and the first whose objective stays below
``STABILITY_FACTOR`` times its initial value is kept, so momentum runs that
blow up on longer budgets are rejected. The winners are frozen in ``configs/<scenario>.toml`` and in
``palmnut.experiments.SCENARIO_DEFAULTS``.

Usage::

    python scripts/sweep_lambdas.py --scenario denoise --scenario recon --points-per-decade 2
"""
import argparse
import csv
import sys

import numpy as np

from palmnut.errors import PalmnutError
from palmnut.experiments import BUILDERS, resolve_config, solver_config
from palmnut.solvers import run_palmnut


STABILITY_FACTOR = 10.0


def log_grid(lo_exp, hi_exp, per_decade):
    n = (hi_exp - lo_exp) * per_decade + 1
    return [float(f"{v:.3g}") for v in np.logspace(lo_exp, hi_exp, n)]


def sweep(scenario, grid, max_iter=None, seed=0):
    overrides = {"seed": seed}
    if max_iter is not None:
        overrides["max_iter"] = max_iter
    rows = []
    for lam1 in grid:
        for lam2 in grid:
            cfg = resolve_config(scenario, dict(overrides, lambda1=lam1, lambda2=lam2))
            inst = BUILDERS[scenario](cfg)
            try:
                state, trace = run_palmnut(inst.prob, inst.init, solver_config(cfg), inst.metric)
                score = inst.metric(state.m_hat, state.q_hat)
            except PalmnutError:
                score = float("nan")
            rows.append((lam1, lam2, score))
            print(f"{scenario} lambda1={lam1:g} lambda2={lam2:g} nrmse={score:.6g}", file=sys.stderr)
    return rows


def is_stable(scenario, lam1, lam2, iters, seed=0):
    cfg = resolve_config(scenario, dict(seed=seed, lambda1=lam1, lambda2=lam2, max_iter=iters))
    inst = BUILDERS[scenario](cfg)
    try:
        _, trace = run_palmnut(inst.prob, inst.init, solver_config(cfg))
    except PalmnutError:
        return False
    obj = trace.objectives
    return bool(np.all(np.isfinite(obj)) and obj.max() <= STABILITY_FACTOR * obj[0])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", action="append", choices=("denoise", "recon", "combine"))
    ap.add_argument("--points-per-decade", type=int, default=1)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--stability-iter", type=int, help="rerun ranked candidates this long and keep the first bounded one")
    ap.add_argument("--csv", help="write every grid point to this file")
    args = ap.parse_args(argv)
    grid = log_grid(-4, 0, args.points_per_decade)
    table = []
    for scenario in args.scenario or ("denoise", "recon", "combine"):
        rows = sweep(scenario, grid, args.max_iter)
        table += [(scenario,) + r for r in rows]
        finite = [r for r in rows if np.isfinite(r[2])]
        ranked = sorted(finite, key=lambda r: r[2])
        lam1, lam2, best = ranked[0]
        if args.stability_iter:
            for lam1, lam2, best in ranked:
                ok = is_stable(scenario, lam1, lam2, args.stability_iter)
                print(f"{scenario} stability lambda1={lam1:g} lambda2={lam2:g} bounded={ok}", file=sys.stderr)
                if ok:
                    break
        print(f"{scenario}: lambda1={lam1:g} lambda2={lam2:g} final nrmse={best:.6g}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("scenario", "lambda1", "lambda2", "nrmse"))
            w.writerows(table)


if __name__ == "__main__":
    main()
