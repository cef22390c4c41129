"""Command line front end: ``condensate <command> --config PATH``.

Every run writes into ``<out>/<command>-<config digest[:12]>/``:
manifest.json (config digest, versions, timings), report.json and CSV tables.
"""
import argparse
import csv
import json
import os
import platform
import sys
import time
from importlib import metadata

import numpy as np
import scipy

from . import conditions, reduced
from .config import RunConfig
from .errors import CondensateError

COMMANDS = ("check", "ansatz", "reduced", "solve", "paper-tables")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(np.real(x)), "im": float(np.imag(x))}
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.15g}" if isinstance(v, (float, np.floating)) else v for v in row])


def _profile(cfg):
    from .green import GreenData
    from .profile import build_H, build_sigma0
    greens = GreenData(cfg.torus)
    return build_sigma0(build_H(cfg.vortices, greens))


# -- commands -------------------------------------------------------------------

def cmd_check(cfg, outdir):
    prof = _profile(cfg)
    rho = cfg.params.rho or None
    rep = conditions.check_conditions(prof, rho=rho, M=cfg.grid)
    out = rep.to_dict()
    out["D0_negative"] = bool(rep.D0 < 0)
    out["D0_methods_rel_diff"] = abs(rep.D0 - rep.D0_method2) / abs(rep.D0_method2)
    write_json(os.path.join(outdir, "report.json"), out)
    A = np.asarray(rep.A, dtype=float)
    write_csv(os.path.join(outdir, "matrix_A.csv"), [f"c{j}" for j in range(A.shape[1])], A.tolist())
    ok = rep.balance_ok and rep.residues_ok and rep.D0 < 0 and rep.nondegenerate
    print(f"balance_ok={rep.balance_ok} residues_ok={rep.residues_ok} D0={rep.D0:.10g} "
          f"(area route {rep.D0_method2:.10g}) nondegenerate={rep.nondegenerate}")
    print("verdict:", "conditions HOLD" if ok else "conditions FAIL")
    return 0


def cmd_ansatz(cfg, outdir):
    from .ansatz import residual_sweep
    prof = _profile(cfg)
    p = cfg.params
    deltas = np.geomspace(p.delta_max, p.delta_min, p.delta_count)
    rows = residual_sweep(prof, deltas, gamma=p.gamma, M=cfg.grid)
    for r in rows:
        note = "" if r["matched"] else " (matched epsilon has no c_- branch; epsilon = 0 used)"
        print(f"delta={r['delta']:.4g} eps={r['epsilon']:.4g} ||R||_*={r['weighted_norm']:.4g}{note}")
    keys = ["delta", "epsilon", "matched", "weighted_norm", "sup_norm"]
    write_csv(os.path.join(outdir, "residual_sweep.csv"), keys, [[r[k] for k in keys] for r in rows])
    slope = None
    if len(rows) > 1:
        slope = float(np.polyfit(np.log(deltas), np.log([r["weighted_norm"] for r in rows]), 1)[0])
        print(f"fitted slope {slope:.3f} (rate 2 - gamma = {2 - p.gamma:.3f})")
    write_json(os.path.join(outdir, "report.json"), {"rows": rows, "fitted_slope": slope, "gamma": p.gamma})
    return 0


def cmd_reduced(cfg, outdir):
    orders = sorted(set(cfg.vortices.orders)) or [0, 1, 2, 3]
    s_grid = [0.0] + list(np.geomspace(1e-2, cfg.params.zeta_max, 11))
    report = {"discrepancy_log": {}}
    for n in orders:
        rows = reduced.table(n, s_grid)
        write_csv(os.path.join(outdir, f"fg_n{n}.csv"),
                  ["abs_zeta", "f_oracle", "f_series", "f_oned", "g_oracle", "g_series", "g_oned"], rows)
        report["discrepancy_log"][str(n)] = reduced.build_discrepancy_log(n)
    if cfg.concentration:
        prof = _profile(cfg)
        rep = conditions.check_conditions(prof, M=cfg.grid)
        report["inputs"] = {"D0": rep.D0, "gamma": rep.gamma, "upsilon": rep.upsilon, "n": min(prof.orders)}
        if prof.m == 1 and rep.D0 < 0:
            inp = reduced.ReducedInputs(rep.D0, rep.gamma, rep.upsilon, prof.orders[0])
            sol = reduced.solve_reduced(inp)
            report["zero"] = {"mu": sol.mu, "zeta": sol.zeta, "index": sol.index, "det": sol.det,
                              "mu0_closed_form": sol.mu0, "newton_iterations": sol.iterations,
                              "residual": sol.residual, "eigen_branch": sol.branch}
            print(f"mu0={sol.mu0:.12g} index={sol.index} det={sol.det:.4g}")
        else:
            report["zero"] = None
    for n, log in report["discrepancy_log"].items():
        print(f"n={n}: {len(log)} discrepancies")
    write_json(os.path.join(outdir, "report.json"), report)
    return 0


def cmd_solve(cfg, outdir):
    from . import pde_solver as ps
    prof = _profile(cfg)
    rep = conditions.check_conditions(prof, M=cfg.grid)
    n = prof.orders[0]
    mu = (reduced.mu_zero(reduced.ReducedInputs(rep.D0, rep.gamma, rep.upsilon, n))
          if rep.D0 < 0 else 1.0)
    problem = ps.VortexProblem(cfg.vortices, cfg.torus, cfg.grid)
    p = cfg.params
    eps_list = ps.geometric_epsilons(p.eps_start, p.eps_stop, p.eps_ratio)
    W = ps.ansatz_guess(prof, eps_list[0], mu, M=cfg.grid)
    summaries, hist_rows, failures = [], [], []

    def on_step(eps, r):
        if isinstance(r, Exception):
            failures.append({"epsilon": eps, "error": str(r), "history": getattr(r, "history", [])})
            print(f"eps={eps:.5g} FAILED: {r}")
            return
        print(f"eps={eps:.5g} iters={r.newton_iters} residual={r.final_residual:.2e} "
              f"mass={r.concentration_masses} phi_max={r.phi_max:.4g}")

    results = ps.continuation(problem, eps_list, W, on_step=on_step)
    radii = np.linspace(0.02, 0.4, 20) * float(np.hypot(*cfg.torus.sides())) / np.sqrt(2)
    prof_rows = []
    for r in results:
        d = ps.diagnostics(r, problem)
        summaries.append({**r.summary(), **d})
        for k, h in enumerate(r.history):
            hist_rows.append((r.epsilon, k, h))
        masses = ps.radial_mass_profile(r, problem, cfg.vortices.centers[0], radii)
        prof_rows += [(r.epsilon, float(R), float(mm)) for R, mm in zip(radii, masses)]
    write_csv(os.path.join(outdir, "newton_history.csv"), ["epsilon", "iteration", "sup_residual"], hist_rows)
    write_csv(os.path.join(outdir, "radial_mass.csv"), ["epsilon", "radius", "mass"], prof_rows)
    write_json(os.path.join(outdir, "report.json"), {"mu": mu, "solutions": summaries, "failures": failures})
    return 0 if results else 1


def cmd_paper_tables(cfg, outdir):
    s_lam, s_k3 = conditions.section_constants()
    ineq = conditions.square_inequality()
    rows = [("lambda_sum", s_lam), ("k3_sum", s_k3), ("lhs", ineq["lhs"]), ("rhs", ineq["rhs"])]
    write_csv(os.path.join(outdir, "constants.csv"), ["quantity", "value"], rows)
    verdict = "strong square inequality HOLDS" if ineq["holds"] else "strong square inequality FAILS"
    write_json(os.path.join(outdir, "report.json"), {"constants": dict(rows), "verdict": verdict})
    print(f"32 pi^4 sum lambda_k(lambda_k+1)(6lambda_k^2+6lambda_k+1) = {s_lam:.4f}")
    print(f"80 pi^4 sum k^3 e^(-2 pi k m) = {s_k3:.4f}")
    print(verdict)
    return 0


HANDLERS = {"check": cmd_check, "ansatz": cmd_ansatz, "reduced": cmd_reduced,
            "solve": cmd_solve, "paper-tables": cmd_paper_tables}


def build_parser():
    ap = argparse.ArgumentParser(prog="condensate", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--grid", type=int, metavar="M")
    ap.add_argument("--out", metavar="DIR")
    ap.add_argument("--seed", type=int, metavar="U64")
    ap.add_argument("--tol", type=float, metavar="FLOAT")
    return ap


def _default_config():
    return RunConfig(points=((0.25 + 0.25j, 2), (-0.25 + 0.25j, 2), (0.25 - 0.25j, 0), (-0.25 - 0.25j, 2)),
                     concentration=(0,))


def run(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.config:
            cfg = RunConfig.load(args.config)
        elif args.command == "paper-tables":
            cfg = _default_config()
        else:
            print("error: --config is required for this command", file=sys.stderr)
            return 2
        cfg = cfg.with_overrides(grid=args.grid, out=args.out, seed=args.seed, tol=args.tol)
    except CondensateError as err:
        print(f"error ({type(err).__name__}, quantity={err.quantity}): {err}", file=sys.stderr)
        return 2
    np.random.seed(cfg.seed % 2 ** 32)
    outdir = os.path.join(cfg.out, f"{args.command}-{cfg.digest()[:12]}")
    os.makedirs(outdir, exist_ok=True)
    cfg.dump(os.path.join(outdir, "config.txt"))
    error = None
    try:
        status = HANDLERS[args.command](cfg, outdir)
    except CondensateError as err:
        error = {"type": type(err).__name__, "quantity": err.quantity, "message": str(err)}
        print(f"error ({error['type']}, quantity={err.quantity}): {err}", file=sys.stderr)
        status = 1
    manifest = {
        "command": args.command, "config_sha256": cfg.digest(), "seed": cfg.seed,
        "versions": {"package": _version(), "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "timings": {"total_seconds": time.perf_counter() - t0},
        "status": status, "error": error,
    }
    write_json(os.path.join(outdir, "manifest.json"), manifest)
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
