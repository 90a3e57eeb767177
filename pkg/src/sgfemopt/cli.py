"""Experiment driver: convergence tables and field snapshots.

Subcommands:
  solve   run a convergence family and write one CSV row per mesh
  fields  dump final state / initial dual / control along the interface

Flags may come from a flat key=value config file (--config); explicit
command-line flags win.  With --parallel-rows the independent rows of a
family run in separate processes; SGFEMOPT_THREADS caps the worker
count.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import analysis, geometry
from .analysis import ConvergenceRow, RunResult, attach_orders, run_case, self_convergence
from .errors import ConfigError
from .problems import build_problem
from .space import evaluation_matrix

CSV_HEADER = ("example,beta_minus,beta_plus,N,M,err_state,order_state,"
              "err_control,order_control,err_adjoint,order_adjoint,iters,seconds")
THREADS_ENV = "SGFEMOPT_THREADS"


@dataclass
class RunConfig:
    example: str = "ex1"
    beta_minus: float = 1.0
    beta_plus: float = 10.0
    alpha: float = 1.0
    n_list: List[int] = field(default_factory=lambda: [8, 16])
    dt_rule: str = "h2"
    tol: float = 1e-10
    max_iter: int = 200
    out: Optional[str] = None
    emit_fields: bool = False
    fields_dir: str = "fields"
    plot_res: int = 64
    reference: Optional[tuple] = None   # (N_ref, M_ref) for ex3
    no_timing: bool = False
    parallel_rows: bool = False

    def validate(self):
        if self.example not in ("ex1", "ex2c1", "ex2c2", "ex3"):
            raise ConfigError(f"unknown example {self.example!r}")
        if self.dt_rule not in ("h2", "h1"):
            raise ConfigError(f"dt rule must be h2 or h1, got {self.dt_rule!r}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError(f"N list must be strictly increasing, got {self.n_list}")
        if self.beta_minus <= 0 or self.beta_plus <= 0:
            raise ConfigError("beta values must be positive")
        return self


def steps_for(N: int, rule: str, T: float = 1.0) -> int:
    """Time step count for table row N: h2 pairs dt with (2/N)^2, h1 with 2/N."""
    h = 2.0 / N
    return math.ceil(T / (h * h)) if rule == "h2" else math.ceil(T / h)


def mesh_for(N: int) -> int:
    """Grid count for table row N.

    The printed tables label rows by 1/h with mesh spacing 1/N on the
    square of side 2, so row N runs a 2N x 2N grid; the step count still
    follows the row label (dt = (2/N)^2 pairs row 128 with 4096 steps).
    """
    return 2 * N


def parse_config_file(path) -> dict:
    """Flat key=value file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            out[key] = value
    return out


def _parse_pair(text, what):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{what} expects two comma-separated values, got {text!r}")
    return parts


def config_from_args(args, file_values: dict) -> RunConfig:
    cfg = RunConfig()

    def pick(flag_value, key):
        return flag_value if flag_value is not None else file_values.get(key)

    try:
        v = pick(args.example, "example")
        if v is not None:
            cfg.example = v
        v = pick(args.beta, "beta")
        if v is not None:
            bm, bp = _parse_pair(v, "--beta")
            cfg.beta_minus, cfg.beta_plus = float(bm), float(bp)
        v = pick(args.alpha, "alpha")
        if v is not None:
            cfg.alpha = float(v)
        v = pick(args.n, "n")
        if v is not None:
            cfg.n_list = [int(p) for p in str(v).split(",") if p.strip()]
        v = pick(args.dt_rule, "dt_rule")
        if v is not None:
            cfg.dt_rule = v
        v = pick(args.tol, "tol")
        if v is not None:
            cfg.tol = float(v)
        v = pick(args.max_iter, "max_iter")
        if v is not None:
            cfg.max_iter = int(v)
        v = pick(args.reference, "reference")
        if v is not None:
            nr, mr = _parse_pair(v, "--reference")
            cfg.reference = (int(nr), int(mr))
        cfg.out = args.out if args.out is not None else file_values.get("out")
        cfg.emit_fields = bool(getattr(args, "emit_fields", False)
                               or file_values.get("emit_fields", "") in ("1", "true"))
        cfg.fields_dir = getattr(args, "fields_dir", None) or \
            file_values.get("fields_dir", cfg.fields_dir)
        v = getattr(args, "plot_res", None) or file_values.get("plot_res")
        if v is not None:
            cfg.plot_res = int(v)
        cfg.no_timing = bool(getattr(args, "no_timing", False))
        cfg.parallel_rows = bool(getattr(args, "parallel_rows", False))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def _run_row_worker(payload):
    """Rebuild the problem in-process so rows can run in worker processes."""
    example, bm, bp, alpha, N, mesh_n, M, tol, max_iter = payload
    problem = build_problem(example, bm, bp, alpha)
    result = run_case(problem, mesh_n, M, tol=tol, max_iter=max_iter)
    e_state, e_ctrl, e_adj = analysis.errors_vs_exact(result)
    return (N, M, e_state, e_ctrl, e_adj, result.report.iterations,
            result.seconds, result.report.converged)


def run_convergence(cfg: RunConfig):
    """One ConvergenceRow per mesh in the family.  Returns (rows, results)."""
    if cfg.example == "ex3":
        return _run_self_convergence(cfg)

    payloads = [(cfg.example, cfg.beta_minus, cfg.beta_plus, cfg.alpha, N,
                 mesh_for(N), steps_for(N, cfg.dt_rule), cfg.tol, cfg.max_iter)
                for N in cfg.n_list]
    if cfg.parallel_rows and len(payloads) > 1:
        workers = int(os.environ.get(THREADS_ENV, "0")) or None
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_row_worker, payloads))
    else:
        raw = [_run_row_worker(p) for p in payloads]

    rows = [ConvergenceRow(N=N, M=M, err_state=es, err_control=ec, err_adjoint=ea,
                           order_state=None, order_control=None, order_adjoint=None,
                           iterations=it, seconds=sec, converged=conv)
            for (N, M, es, ec, ea, it, sec, conv) in raw]
    return attach_orders(rows), None


def _run_self_convergence(cfg: RunConfig):
    n_ref, m_ref = cfg.reference if cfg.reference else (128, 4096)
    problem = build_problem(cfg.example, cfg.beta_minus, cfg.beta_plus, cfg.alpha)
    reference = run_case(problem, mesh_for(n_ref), m_ref, tol=cfg.tol,
                         max_iter=cfg.max_iter)
    rows = []
    last = None
    for N in cfg.n_list:
        M = steps_for(N, cfg.dt_rule)
        coarse = run_case(problem, mesh_for(N), M, tol=cfg.tol, max_iter=cfg.max_iter)
        es, ec, ea = self_convergence(reference, coarse)
        rows.append(ConvergenceRow(N=N, M=M, err_state=es, err_control=ec,
                                   err_adjoint=ea, order_state=None,
                                   order_control=None, order_adjoint=None,
                                   iterations=coarse.report.iterations,
                                   seconds=coarse.seconds,
                                   converged=coarse.report.converged))
        last = coarse
    return attach_orders(rows), last


def format_rows(cfg: RunConfig, rows) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        def fmt_order(v):
            return "" if v is None else f"{v:.4f}"

        seconds = 0.0 if cfg.no_timing else r.seconds
        lines.append(",".join([
            cfg.example, f"{cfg.beta_minus:g}", f"{cfg.beta_plus:g}",
            str(r.N), str(r.M),
            f"{r.err_state:.6e}", fmt_order(r.order_state),
            f"{r.err_control:.6e}", fmt_order(r.order_control),
            f"{r.err_adjoint:.6e}", fmt_order(r.order_adjoint),
            str(r.iterations), f"{seconds:.3f}",
        ]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# field dumps
# ---------------------------------------------------------------------------

def dump_fields(result: RunResult, out_dir, plot_res: int = 64):
    """Write plotting-grid snapshots and the control along the interface.

    The state is sampled at the final time, the dual at the initial time
    (its terminal value is identically zero by construction), and the
    control at the final interval against its exact counterpart where
    one exists.  All files are whitespace-delimited text.
    """
    os.makedirs(out_dir, exist_ok=True)
    problem, grid = result.problem, result.grid
    xs = np.linspace(-1.0, 1.0, plot_res + 1)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    E = evaluation_matrix(result.space, pts)
    side = problem.side_of(pts)

    def write_grid(name, computed, exact_vals):
        err = np.abs(computed - exact_vals)
        data = np.column_stack([pts, computed, exact_vals, err])
        np.savetxt(os.path.join(out_dir, name), data,
                   header="x y computed exact abs_error", comments="# ")

    state_T = E @ result.state[grid.M]
    exact_state = problem.exact.state(pts, grid.T, side) if problem.exact \
        else np.zeros(pts.shape[0])
    write_grid("state_final.dat", state_T, exact_state)

    adj_0 = E @ result.adjoint[0]
    exact_adj = problem.exact.adjoint(pts, 0.0, side) if problem.exact \
        else np.zeros(pts.shape[0])
    write_grid("adjoint_initial.dat", adj_0, exact_adj)

    ifc_pts = result.control.points
    param = geometry.curve_parameter(problem.interface, ifc_pts)
    order = np.argsort(param, kind="stable")
    u_final = result.control.knot_values[grid.M - 1]
    exact_u = problem.exact.control(ifc_pts, grid.T) if problem.exact \
        else np.zeros(ifc_pts.shape[0])
    data = np.column_stack([param[order], ifc_pts[order], u_final[order],
                            exact_u[order], np.abs(u_final - exact_u)[order]])
    np.savetxt(os.path.join(out_dir, "control_final.dat"), data,
               header="param x y computed exact abs_error", comments="# ")
    return out_dir


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="sgfemopt",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--example", choices=["ex1", "ex2c1", "ex2c2", "ex3"])
        p.add_argument("--beta", help="beta_minus,beta_plus")
        p.add_argument("--alpha")
        p.add_argument("--tol")
        p.add_argument("--max-iter", dest="max_iter")
        p.add_argument("--dt-rule", dest="dt_rule", choices=["h2", "h1"])
        p.add_argument("--reference", help="N_ref,M_ref for self-convergence")

    solve = sub.add_parser("solve", help="run a convergence family")
    add_common(solve)
    solve.add_argument("--n", help="comma-separated mesh counts, increasing")
    solve.add_argument("--out", help="CSV output path (default stdout)")
    solve.add_argument("--emit-fields", action="store_true", dest="emit_fields")
    solve.add_argument("--fields-dir", dest="fields_dir")
    solve.add_argument("--plot-res", dest="plot_res")
    solve.add_argument("--no-timing", action="store_true", dest="no_timing",
                       help="report 0.0 in the seconds column (reproducible output)")
    solve.add_argument("--parallel-rows", action="store_true", dest="parallel_rows")

    fields = sub.add_parser("fields", help="dump field snapshots for one mesh")
    add_common(fields)
    fields.add_argument("--n", help="single mesh count", required=False)
    fields.add_argument("--m", help="explicit step count (defaults to dt rule)")
    fields.add_argument("--out", help="output directory", default="fields")
    fields.add_argument("--plot-res", dest="plot_res")
    return parser


def cmd_solve(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    cfg = config_from_args(args, file_values)
    rows, last = run_convergence(cfg)
    text = format_rows(cfg, rows)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.emit_fields:
        if last is None:
            problem = build_problem(cfg.example, cfg.beta_minus, cfg.beta_plus,
                                    cfg.alpha)
            N = cfg.n_list[-1]
            last = run_case(problem, mesh_for(N), steps_for(N, cfg.dt_rule),
                            tol=cfg.tol, max_iter=cfg.max_iter)
        dump_fields(last, cfg.fields_dir, cfg.plot_res)
    bad = [r.N for r in rows if not r.converged]
    if bad:
        print(f"warning: rows {bad} did not reach the fixed-point tolerance",
              file=sys.stderr)
        return 1
    return 0


def cmd_fields(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    cfg = config_from_args(args, file_values)
    N = cfg.n_list[-1]
    M = int(args.m) if getattr(args, "m", None) else steps_for(N, cfg.dt_rule)
    problem = build_problem(cfg.example, cfg.beta_minus, cfg.beta_plus, cfg.alpha)
    result = run_case(problem, mesh_for(N), M, tol=cfg.tol, max_iter=cfg.max_iter)
    dump_fields(result, args.out, cfg.plot_res)
    return 0 if result.report.converged else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_fields(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
