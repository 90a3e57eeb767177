"""Discrete error norms, convergence orders and run drivers.

Space-time norms treat the discrete fields as piecewise constant in
time (state on the right knot of each interval, dual on the left).
Smooth references are sampled at the matching collocation knot of each
interval: that is where the marching scheme is consistent, and it is the
convention the published error columns follow (an interval-integrated
comparison additionally measures the O(dt) staircase distance between
the piecewise-constant trajectory and the moving exact field, which the
printed values demonstrably exclude).  Spatially, piecewise-smooth
references are integrated side-aware on the cut-cell quadrature so
branch mixing cannot pollute measured orders.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import control as ctrl
from .assembly import get_assembler
from .errors import IncompatibleMeshes, NonPositiveError
from .mesh import build_uniform_mesh
from .problems import ProblemSpec
from .space import build_space, evaluation_matrix
from .timestepping import OperatorSet, TimeGrid, Trajectory


def _interval_value(traj: Trajectory, n: int) -> np.ndarray:
    """The coefficient vector a trajectory carries on interval n."""
    return traj[n] if traj.role == "state" else traj[n - 1]


def l2_space_time_error(field, reference, grid: TimeGrid, space) -> float:
    """Space-time L2 distance between a trajectory and a reference.

    ``field`` is a Trajectory; ``reference`` may be a second Trajectory
    on the same space/grid, a side-aware callable (pts, t, side), or
    None for the plain norm.  Callable references are sampled at the
    collocation knot the trajectory carries on each interval.
    """
    asm = get_assembler(space)
    total = 0.0
    for n in range(1, grid.M + 1):
        vals = asm.B @ _interval_value(field, n)
        if isinstance(reference, Trajectory):
            diff = vals - asm.B @ _interval_value(reference, n)
        elif reference is None:
            diff = vals
        else:
            t_knot = grid.knot(n if field.role == "state" else n - 1)
            diff = vals - reference(asm.pts, t_knot, asm.side)
        total += grid.dt * float(np.sum(asm.w * diff * diff))
    return float(np.sqrt(total))


def l2_interface_error(field: ctrl.ControlField, exact, grid: TimeGrid) -> float:
    """Space-time interface L2 distance to an exact control (or zero).

    Uses the field's knot values against the exact control at the right
    knot of each interval.
    """
    total = 0.0
    for n in range(1, grid.M + 1):
        diff = field.knot_values[n - 1]
        if exact is not None:
            diff = diff - exact(field.points, grid.knot(n))
        total += grid.dt * float(np.sum(field.weights * diff * diff))
    return float(np.sqrt(total))


def eoc(errors, h_values) -> list:
    """Pairwise experimental orders log(E1/E2)/log(h1/h2)."""
    errors = np.asarray(errors, float)
    h = np.asarray(h_values, float)
    if np.any(errors <= 0):
        raise NonPositiveError("errors must be positive to take logs")
    if errors.size != h.size:
        raise ValueError("errors and h_values must have matching lengths")
    return [float(np.log(errors[k - 1] / errors[k]) / np.log(h[k - 1] / h[k]))
            for k in range(1, errors.size)]


@dataclass
class RunResult:
    """Everything one optimization run produces."""

    problem: ProblemSpec
    N: int
    grid: TimeGrid
    space: object
    ops: OperatorSet
    control: ctrl.ControlField
    state: Trajectory
    adjoint: Trajectory
    report: ctrl.OptimizerReport
    seconds: float


_SPACE_CACHE = {}


def space_for(interface, N: int):
    """Spaces keyed by interface identity; reused across runs."""
    key = (interface.kind, interface.params, N)
    space = _SPACE_CACHE.get(key)
    if space is None:
        space = build_space(build_uniform_mesh(N), interface)
        _SPACE_CACHE[key] = space
    return space


def run_case(problem: ProblemSpec, N: int, M: int, tol: float = 1e-10,
             max_iter: int = 200) -> RunResult:
    """Build the discretization for one (N, M) pair and optimize."""
    start = time.perf_counter()
    space = space_for(problem.interface, N)
    grid = TimeGrid(T=problem.T, M=M)
    ops = OperatorSet(space, problem.beta_minus, problem.beta_plus, grid,
                      boundary_values=problem.boundary_trace)
    u, state, adjoint, report = ctrl.fixed_point_solve(problem, ops, tol=tol,
                                                       max_iter=max_iter)
    return RunResult(problem=problem, N=N, grid=grid, space=space, ops=ops,
                     control=u, state=state, adjoint=adjoint, report=report,
                     seconds=time.perf_counter() - start)


def errors_vs_exact(result: RunResult):
    """State, control and adjoint errors against the closed-form triple."""
    exact = result.problem.exact
    if exact is None:
        raise ValueError("problem carries no exact solution")
    e_state = l2_space_time_error(result.state, exact.state, result.grid,
                                  result.space)
    e_adj = l2_space_time_error(result.adjoint, exact.adjoint, result.grid,
                                result.space)
    e_ctrl = l2_interface_error(result.control, exact.control, result.grid)
    return e_state, e_ctrl, e_adj


def self_convergence(reference: RunResult, coarse: RunResult):
    """Errors of a coarse run measured against a fine reference run.

    The coarse fields are transferred to the reference quadrature by
    point location and basis evaluation; both time grids must nest.
    """
    if reference.N % coarse.N != 0 or reference.grid.M % coarse.grid.M != 0:
        raise IncompatibleMeshes(
            f"coarse N={coarse.N}, M={coarse.grid.M} do not divide "
            f"reference N={reference.N}, M={reference.grid.M}")
    asm_ref = get_assembler(reference.space)
    grid_r = reference.grid
    ratio = grid_r.M // coarse.grid.M

    E_vol = evaluation_matrix(coarse.space, asm_ref.pts)
    E_ifc = evaluation_matrix(coarse.space, asm_ref.ifc_pts)
    alpha = coarse.problem.alpha
    bounds = coarse.problem.bounds

    err_state = err_adj = err_ctrl = 0.0
    cache_m = -1
    state_c = adj_c = trace_c = None
    for n in range(1, grid_r.M + 1):
        m = (n + ratio - 1) // ratio
        if m != cache_m:
            state_c = E_vol @ coarse.state[m]
            adj_c = E_vol @ coarse.adjoint[m - 1]
            trace_c = E_ifc @ coarse.adjoint[m - 1]
            cache_m = m
        dt_r = grid_r.dt
        ds = state_c - asm_ref.B @ reference.state[n]
        da = adj_c - asm_ref.B @ reference.adjoint[n - 1]
        err_state += dt_r * float(np.sum(asm_ref.w * ds * ds))
        err_adj += dt_r * float(np.sum(asm_ref.w * da * da))

        u_c = bounds.clamp(-trace_c / alpha, asm_ref.ifc_pts, grid_r.knot(n))
        du = u_c - reference.control.knot_values[n - 1]
        err_ctrl += dt_r * float(np.sum(asm_ref.ifc_w * du * du))
    return float(np.sqrt(err_state)), float(np.sqrt(err_ctrl)), float(np.sqrt(err_adj))


@dataclass
class ConvergenceRow:
    N: int
    M: int
    err_state: float
    err_control: float
    err_adjoint: float
    order_state: Optional[float]
    order_control: Optional[float]
    order_adjoint: Optional[float]
    iterations: int
    seconds: float
    converged: bool


def attach_orders(rows):
    """Fill the order columns of a family of rows, first row left empty."""
    for k in range(1, len(rows)):
        h1, h2 = 2.0 / rows[k - 1].N, 2.0 / rows[k].N
        rows[k].order_state = eoc([rows[k - 1].err_state, rows[k].err_state],
                                  [h1, h2])[0]
        rows[k].order_control = eoc([rows[k - 1].err_control, rows[k].err_control],
                                    [h1, h2])[0]
        rows[k].order_adjoint = eoc([rows[k - 1].err_adjoint, rows[k].err_adjoint],
                                    [h1, h2])[0]
    return rows
