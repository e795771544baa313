"""Command line front end.

Subcommands: solve, simulate, sweep, report, validate.  Exit codes: 0 on
success, 2 for configuration problems, 3 when the equilibrium iteration does
not converge, 4 when a solution or scheme invariant fails.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, load_config
from .deployment import generate_deployment
from .errors import ConfigError, ConvergenceError, InvariantError, SchemeError
from .fields import MfgSolution, initial_density, terminal_value
from .reporting import build_cdf, cdf_table, csv_to_dat, metrics_csv, sweep_report
from .simulate import METRIC_FIELDS, run_episode, run_replications
from .solution_io import load_solution, save_solution
from .solver import solve_mfg


def _ensure_outdir(cfg: RunConfig) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def _write(path: str, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    print(f"wrote {path}")


def _solve(cfg: RunConfig, *, eta: float | None = None,
           noise_norm: float | None = None) -> MfgSolution:
    s = cfg.raw["solver"]
    phy = cfg.phy if eta is None else replace(cfg.phy, sbs_density=eta)
    rho0 = initial_density(cfg.grid, s["rho0_mean"], s["rho0_variance"])
    return solve_mfg(
        cfg.grid, phy, cfg.queue, cfg.boundary,
        noise_norm=s["noise_norm"] if noise_norm is None else noise_norm,
        mean_sq_gain=s["mean_sq_gain"], rho0=rho0, damping=s["damping"],
        tol=s["tol"], max_iters=s["max_iters"], init=s["init"],
    )


def _calibrate_and_solve(cfg: RunConfig, isd_units: float, k: int,
                         boundary: str | None = None) -> tuple:
    """One coupling solve per geometry: derive the coupling strength and the
    normalized noise from a reference deployment draw, then solve."""
    dep_cfg = cfg.raw["deployment"]
    base_seed = cfg.raw["simulate"]["base_seed"]
    seed = np.random.SeedSequence(base_seed, spawn_key=(0, 0))
    dep = generate_deployment(isd_units, k, cfg.phy, cfg.pathloss, seed=seed,
                              area_km2=dep_cfg["area_km2"],
                              jitter_frac=dep_cfg["jitter_frac"],
                              fading=dep_cfg["fading"],
                              cross_isolation_db=dep_cfg["cross_isolation_db"],
                              rician_k_db=dep_cfg["rician_k_db"])
    if boundary is not None:
        cfg = replace(cfg, raw={**cfg.raw, "solver": {**cfg.raw["solver"],
                                                      "boundary": boundary}})
    sol = _solve(cfg, eta=dep.eta, noise_norm=dep.noise_norm)
    return sol, dep


def _run_methods(cfg: RunConfig, methods, sol: MfgSolution | None,
                 isd_units: float, k: int, dpp=None):
    dep_cfg = cfg.raw["deployment"]
    sim = cfg.raw["simulate"]
    qos = cfg.raw["scheduler"]["qos_min_rate_bps"]
    dpp = dpp if dpp is not None else cfg.dpp

    def deploy_fn(seed):
        return generate_deployment(isd_units, k, cfg.phy, cfg.pathloss,
                                   seed=seed, area_km2=dep_cfg["area_km2"],
                                   jitter_frac=dep_cfg["jitter_frac"],
                                   fading=dep_cfg["fading"],
                                   cross_isolation_db=dep_cfg["cross_isolation_db"],
                              rician_k_db=dep_cfg["rician_k_db"])

    results = {}
    for method in methods:
        def episode_fn(dep, base_seed, i, method=method):
            return run_episode(
                dep, method, cfg.phy, cfg.queue, n_periods=sim["n_periods"],
                seed=base_seed, solution=sol, dpp=dpp, qos_min_rate_bps=qos,
                slots_per_period=sim["slots_per_period"],
                initial_backlog=sim["initial_backlog"],
                estimate_mode=sim["estimate_mode"],
                drain_window_slots=sim["drain_window_slots"], replicate=i)

        results[method] = run_replications(deploy_fn, episode_fn,
                                           sim["n_replicates"],
                                           sim["base_seed"], jobs=cfg.jobs)
    return results


def _summary_csv(results: dict) -> str:
    lines = ["method,metric,n,mean,ci_lo,ci_hi"]
    for method in sorted(results):
        _, summary = results[method]
        for key in METRIC_FIELDS:
            lines.append(",".join([
                method, key, str(summary.n), "%.12g" % summary.mean[key],
                "%.12g" % summary.lo(key), "%.12g" % summary.hi(key)]))
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    outdir = _ensure_outdir(cfg)
    sol = _solve(cfg)
    out = args.out or os.path.join(outdir, "solution.mfg")
    save_solution(out, sol)
    print(f"wrote {out}")
    log_path = os.path.splitext(out)[0] + ".log"
    log_lines = [f"{i + 1} {r:.6e}" for i, r in enumerate(sol.residuals)]
    _write(log_path, "\n".join(log_lines) + "\n")
    print(f"converged in {sol.iterations} iterations, residual {sol.residual:.3e}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    outdir = _ensure_outdir(cfg)
    methods = ("mfg", "baseline") if args.method == "both" else (args.method,)
    dep_cfg = cfg.raw["deployment"]

    sol = None
    if "mfg" in methods:
        if args.solution:
            sol = load_solution(args.solution)
        else:
            sol, _ = _calibrate_and_solve(cfg, dep_cfg["isd_units"], dep_cfg["k"])
            save_solution(os.path.join(outdir, "solution.mfg"), sol)

    results = _run_methods(cfg, methods, sol, dep_cfg["isd_units"], dep_cfg["k"])
    for method, (metrics, _) in results.items():
        _write(os.path.join(outdir, f"metrics_{method}.csv"), metrics_csv(metrics))
    _write(os.path.join(outdir, "summary.csv"), _summary_csv(results))
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    outdir = _ensure_outdir(cfg)
    key, values = cfg.sweep_values()
    dep_cfg = cfg.raw["deployment"]

    points = []
    all_rows = []
    for value in values:
        isd, k = dep_cfg["isd_units"], dep_cfg["k"]
        boundary, dpp = None, cfg.dpp
        if key == "isd":
            isd = value
        elif key == "k":
            k = value
        elif key == "boundary":
            boundary = value
        elif key == "v":
            dpp = replace(cfg.dpp, v_coeff=-abs(value))
        sol, _ = _calibrate_and_solve(cfg, isd, k, boundary)
        results = _run_methods(cfg, ("mfg", "baseline"), sol, isd, k, dpp=dpp)
        points.append((value, {m: r[1] for m, r in results.items()}))
        for method, (metrics, _) in results.items():
            for m in metrics:
                all_rows.append(m)
        print(f"swept {key}={value}")

    _write(os.path.join(outdir, "sweep_metrics.csv"), metrics_csv(all_rows))
    for metric in args.metrics:
        table = sweep_report(key, points, metric)
        path = os.path.join(outdir, f"sweep_{metric}.csv")
        _write(path, table)
        _write(os.path.splitext(path)[0] + ".dat", csv_to_dat(table))
    return 0


def _read_metrics_rows(path: str):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"no metric rows in {path}")
    return rows


def cmd_report(args) -> int:
    if args.metric not in METRIC_FIELDS:
        raise ConfigError(f"unknown metric {args.metric!r}")
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    by_method = {}
    for path in args.metrics:
        for row in _read_metrics_rows(path):
            try:
                by_method.setdefault(row["method"], []).append(float(row[args.metric]))
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"{path} lacks a {args.metric!r} column") from exc

    for method, vals in sorted(by_method.items()):
        cdf = build_cdf(vals)
        _write(os.path.join(outdir, f"cdf_{args.metric}_{method}.csv"), cdf_table(cdf))
    lines = ["method,n,mean,median"]
    for method, vals in sorted(by_method.items()):
        arr = np.asarray(vals)
        lines.append(f"{method},{arr.size},{'%.12g' % arr.mean()},{'%.12g' % np.median(arr)}")
    _write(os.path.join(outdir, f"report_{args.metric}.csv"), "\n".join(lines) + "\n")

    if args.plot:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError as exc:
            raise ConfigError("plotting requires matplotlib") from exc
        fig, ax = plt.subplots(figsize=(5, 3.4))
        for method, vals in sorted(by_method.items()):
            cdf = build_cdf(vals)
            frac = np.arange(1, cdf.n + 1) / cdf.n
            ax.step(cdf.values, frac, where="post", label=method)
        ax.set_xlabel(args.metric)
        ax.set_ylabel("cumulative fraction")
        ax.legend()
        fig.tight_layout()
        png = os.path.join(outdir, f"cdf_{args.metric}.png")
        fig.savefig(png, dpi=150)
        print(f"wrote {png}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    sol = load_solution(args.solution)
    sol.validate()
    g = sol.grid
    if (g.n_t, g.n_q) != (cfg.grid.n_t, cfg.grid.n_q):
        raise InvariantError(
            f"solution grid {g.n_t}x{g.n_q} does not match config "
            f"{cfg.grid.n_t}x{cfg.grid.n_q}")
    if sol.boundary != cfg.boundary:
        raise InvariantError(
            f"solution terminal condition {sol.boundary!r} does not match "
            f"config {cfg.boundary!r}")
    expected = terminal_value(sol.boundary, g.queues)
    if not np.allclose(sol.value[-1], expected, rtol=0, atol=1e-9):
        raise InvariantError("stored terminal values do not match their kind")
    if sol.residual >= cfg.raw["solver"]["tol"]:
        raise InvariantError(
            f"stored residual {sol.residual:.3e} exceeds config tolerance")
    print(f"ok: {args.solution} ({g.n_t}x{g.n_q}, {sol.iterations} iterations, "
          f"residual {sol.residual:.3e})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="udnsim",
        description="Mean-field power control and scheduling for ultra-dense"
                    " small-cell networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the coupled equilibrium equations")
    p.add_argument("--config", help="configuration file (defaults apply if omitted)")
    p.add_argument("--out", help="solution file path (default <outdir>/solution.mfg)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run seeded episodes and write metrics")
    p.add_argument("--config", help="configuration file")
    p.add_argument("--method", choices=("mfg", "baseline", "both"), default="both")
    p.add_argument("--solution", help="reuse a saved solution instead of solving")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter and summarize both methods")
    p.add_argument("--config", required=True, help="configuration file with a [sweep] section")
    p.add_argument("--metrics", nargs="+", default=["ee_bits_per_j", "outage_fraction"],
                   help="summary metrics to tabulate")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate per-episode metric files")
    p.add_argument("--metrics", nargs="+", required=True, help="metrics CSV files")
    p.add_argument("--metric", default="ee_bits_per_j")
    p.add_argument("--out", default="out")
    p.add_argument("--plot", action="store_true", help="also write a CDF figure")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check a stored solution against a config")
    p.add_argument("--config", help="configuration file")
    p.add_argument("--solution", required=True, help="solution file to check")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3
    except (SchemeError, InvariantError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
