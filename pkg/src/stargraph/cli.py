"""Command-line driver.

Every subcommand is file-based and reproducible: identical command lines with
identical seeds produce byte-identical data files.  Commands that write files
also drop a manifest (command line, config snapshot, versions, wall time and
content digests) next to the primary output.  Exit codes: 0 success, 1 failed
verification, 2 usage error, 3 infeasible constraints, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, analysis, forced, phase, taco
from .graphon import StepGraphon
from .optimize import (
    ConstraintSet,
    InfeasibleError,
    MaxIterationsError,
    OptimizerConfig,
    maximize_entropy,
)

CONFIG_KEYS = {
    "kmax": int, "restarts": int, "seed": int, "constraint_tol": float,
    "grad_tol": float, "penalty_growth": float, "max_outer": int, "jobs": int,
}


def fmt(x) -> str:
    """Floats with 17 significant digits, the shortest round-trippable form."""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path, args, cfg, outputs, t_start):
    import scipy
    manifest = {
        "command": " ".join(sys.argv) if sys.argv else "",
        "subcommand": args.command,
        "config": cfg.__dict__ if cfg is not None else None,
        "seed": getattr(args, "seed", None),
        "versions": {
            "stargraph": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": time.time() - t_start,
        "outputs": [{"path": p, "sha256": sha256_file(p),
                     "bytes": os.path.getsize(p)} for p in outputs],
    }
    path = out_path + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def load_config(path):
    conf = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if not value or key not in CONFIG_KEYS:
                raise ValueError(f"bad config line {line!r}")
            conf[key] = CONFIG_KEYS[key](value.strip())
    return conf


def build_cfg(args):
    conf = load_config(args.config) if getattr(args, "config", None) else {}

    def pick(flag, key, default):
        v = getattr(args, flag, None)
        if v is not None:
            return v
        return conf.get(key, default)

    return OptimizerConfig(
        K_max=pick("kmax", "kmax", 8),
        restarts=pick("restarts", "restarts", 24),
        seed=pick("seed", "seed", 0),
        constraint_tol=pick("constraint_tol", "constraint_tol", 1e-9),
        grad_tol=pick("grad_tol", "grad_tol", 1e-7),
        penalty_growth=pick("penalty_growth", "penalty_growth", 10.0),
        max_outer=pick("max_outer", "max_outer", 30),
    )


def jobs_of(args):
    if getattr(args, "jobs", None) is not None:
        return max(1, args.jobs)
    env = os.environ.get("STARGRAPH_JOBS")
    return max(1, int(env)) if env else 1


def parse_int_range(text):
    """'2..30' or '2,5,7' or '3'."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p]


def parse_grid(text):
    """'e0:e1:ne,s0:s1:ns' -> (eps values, sigma2 values)."""
    try:
        eps_spec, sig_spec = text.split(",", 1)
        e0, e1, ne = eps_spec.split(":")
        s0, s1, ns = sig_spec.split(":")
        return (np.linspace(float(e0), float(e1), int(ne)),
                np.linspace(float(s0), float(s1), int(ns)))
    except ValueError as exc:
        raise ValueError(f"bad grid spec {text!r}, expected e0:e1:ne,s0:s1:ns") from exc


def read_graphon(path):
    with open(path) as fh:
        return StepGraphon.from_json(fh.read())


# -- subcommands ---------------------------------------------------------------


def cmd_densities(args):
    g = read_graphon(args.graphon)
    out = {"t1": g.edge_density()}
    ks = [int(k) for k in args.k.split(",")] if args.k else []
    if args.all:
        ks = sorted(set(ks) | {2, 3})
    for k in ks:
        out[f"t{k}"] = g.star_density(k)
    if args.all:
        out["t3chain"] = g.chain3_density()
        out["t4cycle"] = g.cycle4_density()
        out["tQ"] = g.signed_quad_density()
        out["entropy"] = g.shannon_entropy()
    text = json.dumps(out, indent=2)
    print(text)
    if args.out:
        t0 = time.time()
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        write_manifest(args.out, args, None, [args.out], t0)
    return 0


def cmd_optimize(args):
    t0 = time.time()
    cfg = build_cfg(args)
    cs = ConstraintSet.parse(args.constraints)
    res = maximize_entropy(cs, cfg)
    payload = {"constraints": [[f.label, v] for f, v in cs.items]}
    payload.update(res.to_dict())
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        write_manifest(args.out, args, cfg, [args.out], t0)
    return 0


def cmd_sweep(args):
    t0 = time.time()
    if args.model != "2star":
        raise UsageError(f"unknown model {args.model!r}")
    cfg = build_cfg(args)
    sweep_cfg = OptimizerConfig(K_max=min(cfg.K_max, 3), restarts=min(cfg.restarts, 10),
                                seed=cfg.seed, constraint_tol=cfg.constraint_tol,
                                grad_tol=cfg.grad_tol, early_stop_agree=5)
    eps_grid, sig_grid = parse_grid(args.grid)
    table = analysis.entropy_surface(eps_grid, sig_grid, sweep_cfg,
                                     jobs=jobs_of(args))
    header = ["eps", "sigma2", "tau2", "entropy", "c1", "podality", "el_residual"]
    rows = [(r.eps, r.sigma2, r.tau2, r.entropy, r.c1, r.podality, r.el_residual)
            for r in table.rows]
    outputs = [write_csv(args.out, header, rows)]
    if args.plot:
        from . import plotting
        outputs.append(plotting.plot_sweep(table.rows, _plot_path(args.out)))
    write_manifest(args.out, args, sweep_cfg, outputs, t0)
    if table.failures:
        print(f"{len(table.failures)} grid points failed or were infeasible",
              file=sys.stderr)
    return 0


def cmd_boundary(args):
    t0 = time.time()
    rows = phase.boundary_samples(args.k, args.samples)
    header = ["eps", "tau_lower", "tau_upper", "branch"]
    if args.out:
        outputs = [write_csv(args.out, header, rows)]
        if args.plot:
            from . import plotting
            outputs.append(plotting.plot_boundary(rows, _plot_path(args.out)))
        write_manifest(args.out, args, None, outputs, t0)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(fmt(v) for v in row))
    return 0


def cmd_crossing(args):
    t0 = time.time()
    ks = parse_int_range(args.k)
    rows = [(k, phase.crossing_point(k)) for k in ks]
    header = ["k", "eps0"]
    if args.out:
        outputs = [write_csv(args.out, header, rows)]
        if args.plot:
            from . import plotting
            outputs.append(plotting.plot_crossing([r[0] for r in rows],
                                                  [r[1] for r in rows],
                                                  _plot_path(args.out)))
        write_manifest(args.out, args, None, outputs, t0)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(fmt(v) for v in row))
    return 0


def cmd_verify_step4(args):
    t0 = time.time()
    ks = parse_int_range(args.k)
    reports = [phase.verify_step4(k, args.grid) for k in ks]
    all_pass = all(r.passed for r in reports)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"k={r.k}: {status} max_F={fmt(r.max_F)} at x={fmt(r.x_at_max)} "
              f"min_z={fmt(r.min_z)} inconsistencies={r.inconsistencies}")
    if args.out:
        header = ["k", "grid", "max_F", "x_at_max", "min_z", "passed", "inconsistencies"]
        rows = [(r.k, r.grid, r.max_F, r.x_at_max, r.min_z, int(r.passed),
                 r.inconsistencies) for r in reports]
        outputs = [write_csv(args.out, header, rows)]
        if args.plot:
            from . import plotting
            curves = []
            for k in ks[:: max(1, len(ks) // 4)]:
                x = np.linspace(1e-6, 1 - 1e-6, 600)
                curves.append((k, x, phase.step4_F(x, phase.step4_z(x, k), k)))
            outputs.append(plotting.plot_step4(curves, _plot_path(args.out)))
        write_manifest(args.out, args, None, outputs, t0)
    print("all pass" if all_pass else "FAILURES present")
    return 0 if all_pass else 1


def cmd_critical_point(args):
    cp = analysis.critical_tau2()
    print(json.dumps(cp.to_dict(), indent=2))
    return 0


def cmd_scan_derivative(args):
    t0 = time.time()
    cfg = build_cfg(args)
    scan_cfg = OptimizerConfig(K_max=min(cfg.K_max, 3), restarts=min(cfg.restarts, 10),
                               seed=cfg.seed, constraint_tol=cfg.constraint_tol,
                               grad_tol=cfg.grad_tol, early_stop_agree=5)
    lo, _, hi = args.window.partition(":")
    lo, hi = float(lo), float(hi)
    center = (lo + hi) / 2.0
    half_points = max(1, int(round((hi - lo) / 2.0 / args.h)))
    result = analysis.derivative_scan(args.tau2, eps_center=center,
                                      half_points=half_points, h=args.h,
                                      cfg=scan_cfg)
    verdict = {k: result[k] for k in
               ("tau2", "jump_detected", "jump_size", "jump_se",
                "slope_left", "slope_right")}
    print(json.dumps(verdict, indent=2))
    if args.out:
        header = ["eps_mid", "ds_deps"]
        outputs = [write_csv(args.out, header, result["profile"])]
        if args.plot:
            from . import plotting
            outputs.append(plotting.plot_scan(result["profile"], args.tau2,
                                              _plot_path(args.out)))
        write_manifest(args.out, args, scan_cfg, outputs, t0)
    return 0


def cmd_taco(args):
    t0 = time.time()
    cloud = taco.boundary_bruteforce(args.resolution)
    header = ["t1", "t2", "t3", "u", "sigma2", "family_id"]
    outputs = [write_csv(args.out, header, cloud.points.tolist())]
    stem, ext = os.path.splitext(args.out)
    env_path = f"{stem}_envelope{ext or '.csv'}"
    outputs.append(write_csv(env_path, ["t1", "t3", "t2_max"],
                             cloud.envelope.tolist()))
    if args.plot:
        from . import plotting
        outputs.append(plotting.plot_taco(cloud.points, _plot_path(args.out, ".png")))
    write_manifest(args.out, args, None, outputs, t0)
    return 0


def cmd_taco_check(args):
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    worst_cs, worst_dual, worst_invol = np.inf, np.inf, 0.0
    for _ in range(args.fuzz):
        K = int(rng.integers(1, 7))
        c = rng.dirichlet(np.ones(K))
        g = rng.uniform(0.0, 1.0, (K, K))
        g = (g + g.T) / 2.0
        graphon = StepGraphon(c, g)
        p = taco.TacoPoint.of(graphon)
        worst_cs = min(worst_cs, taco.cs_inequality(p))
        worst_dual = min(worst_dual, taco.dual_inequality(p))
        q = taco.involution(p)
        comp = taco.TacoPoint.of(graphon.complement())
        worst_invol = max(worst_invol, abs(q.t1 - comp.t1), abs(q.t2 - comp.t2),
                          abs(q.t3 - comp.t3))
    n = args.jacobian_grid
    a = np.linspace(1e-3, 1.0 - 1e-3, n)[:, None, None]
    x2 = np.linspace(1e-3, 1.0 - 1e-3, n)[None, :, None]
    x3 = np.linspace(1e-3, 1.0 - 1e-3, n)[None, None, :]
    jac = taco.jacobian_poly(a, x2, x3)
    interior = (x2 + x3 < 1.0) & np.ones_like(a, dtype=bool)
    jac_min = float(np.min(np.where(interior, jac, np.inf)))
    report = {
        "fuzz": args.fuzz,
        "min_cs_inequality": worst_cs,
        "min_dual_inequality": worst_dual,
        "max_involution_mismatch": worst_invol,
        "jacobian_grid": n,
        "min_jacobian": jac_min,
        "pass": bool(worst_cs >= -1e-12 and worst_dual >= -1e-12
                     and worst_invol <= 1e-14 and jac_min > 0.0),
    }
    print(json.dumps(report, indent=2))
    return 0 if report["pass"] else 1


def cmd_forced(args):
    t0 = time.time()
    cfg = build_cfg(args)
    forced_cfg = OptimizerConfig(K_max=cfg.K_max, restarts=max(cfg.restarts, 48),
                                 seed=cfg.seed, constraint_tol=cfg.constraint_tol,
                                 grad_tol=cfg.grad_tol, early_stop_agree=8)
    alphas = sorted({float(a) for a in args.alphas.split(",")}, reverse=True)
    mode = {"four": forced.FOUR_DENSITIES, "zeta": forced.ZETA_CONSTRAINTS}[args.mode]
    rows, monotone = forced.podality_trend(alphas, mode, forced_cfg)
    header = ["alpha", "podality", "entropy", "K_used", "max_residual"]
    table = [(r["alpha"], r["podality"], r["entropy"], r["K_used"],
              r["max_residual"]) for r in rows]
    outputs = [write_csv(args.out, header, table)]
    if args.plot:
        from . import plotting
        outputs.append(plotting.plot_trend(rows, _plot_path(args.out)))
    write_manifest(args.out, args, forced_cfg, outputs, t0)
    print(json.dumps({"monotone_podality": monotone,
                      "podalities": {fmt(r['alpha']): r["podality"] for r in rows}},
                     indent=2))
    return 0


def cmd_sample(args):
    t0 = time.time()
    g = read_graphon(args.graphon)
    graph = g.sample_graph(args.n, args.seed if args.seed is not None else 0)
    with open(args.out, "w") as fh:
        for u, v in graph.edge_list():
            fh.write(f"{u} {v}\n")
    write_manifest(args.out, args, None, [args.out], t0)
    return 0


def _plot_path(out, ext=".svg"):
    stem, _ = os.path.splitext(out)
    return stem + ext


class UsageError(ValueError):
    pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stargraph",
        description="Constrained entropy maximization over step graphons: "
                    "densities, phase boundaries, transitions, podality runs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeded=True):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--jobs", type=int, help="worker processes "
                       "(default from STARGRAPH_JOBS)")
        if seeded:
            p.add_argument("--seed", type=int)
            p.add_argument("--kmax", type=int)
            p.add_argument("--restarts", type=int)
            p.add_argument("--constraint-tol", dest="constraint_tol", type=float)
            p.add_argument("--grad-tol", dest="grad_tol", type=float)
            p.add_argument("--penalty-growth", dest="penalty_growth", type=float)
            p.add_argument("--max-outer", dest="max_outer", type=int)

    p = sub.add_parser("densities", help="subgraph densities of a graphon file")
    p.add_argument("graphon")
    p.add_argument("--k", help="comma list of star orders")
    p.add_argument("--all", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_densities)

    p = sub.add_parser("optimize", help="maximize entropy under density constraints")
    common(p)
    p.add_argument("--constraints", required=True, help='e.g. "t1=0.5,t2=0.28"')
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="entropy/c1 surface over a parameter grid")
    common(p)
    p.add_argument("--model", default="2star")
    p.add_argument("--grid", required=True, help="e0:e1:ne,s0:s1:ns")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("boundary", help="phase-space boundary curves")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("crossing", help="clique/anticlique crossing points")
    p.add_argument("--k", default="2..30")
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_crossing)

    p = sub.add_parser("verify-step4", help="grid check of the boundary theorem step")
    p.add_argument("--k", default="2..30")
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_verify_step4)

    p = sub.add_parser("critical-point", help="2-star critical point")
    p.set_defaults(func=cmd_critical_point)

    p = sub.add_parser("scan-derivative", help="entropy derivative jump scan")
    common(p)
    p.add_argument("--tau2", type=float, required=True)
    p.add_argument("--window", default="0.495:0.505")
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_scan_derivative)

    p = sub.add_parser("taco", help="brute-force taco boundary cloud")
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_taco)

    p = sub.add_parser("taco-check", help="inequality fuzz and Jacobian positivity")
    p.add_argument("--fuzz", type=int, default=10_000)
    p.add_argument("--jacobian-grid", dest="jacobian_grid", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_taco_check)

    p = sub.add_parser("forced", help="finitely-forced podality trend")
    common(p)
    p.add_argument("--mode", choices=("four", "zeta"), required=True)
    p.add_argument("--alphas", required=True, help="comma list, e.g. 0.02,0.005")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_forced)

    p = sub.add_parser("sample", help="sample a finite graph from a graphon")
    p.add_argument("--graphon", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(json.dumps({"error": "infeasible", "detail": str(exc)}), file=sys.stderr)
        return 3
    except MaxIterationsError as exc:
        print(json.dumps({"error": "max-iterations", "detail": str(exc)}),
              file=sys.stderr)
        return 4
    except (UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(json.dumps({"error": "numerical", "detail": str(exc)}), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
