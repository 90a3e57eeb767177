"""Control carrier, admissible projection, reduced cost and fixed point.

The control never gets its own basis: it lives at the interface
quadrature points, one value per time interval and per time Gauss node
(the bounds of the first benchmark depend on t inside the interval).
The optimum is the clamped, scaled dual trace, and the outer iteration
is the classic alternation of that projection with state/dual sweeps.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import InfeasibleBounds
from .timestepping import OperatorSet, Trajectory, TimeGrid, adjoint_solve, forward_solve

N_TIME_NODES = 2


@dataclass
class AdmissibleSet:
    """Pointwise box bounds on the interface; None means unbounded."""

    u_a: Optional[Callable] = None  # (pts, t) -> values
    u_b: Optional[Callable] = None

    def lower(self, pts, t):
        if self.u_a is None:
            return np.full(pts.shape[0], -np.inf)
        return np.asarray(self.u_a(pts, t), float)

    def upper(self, pts, t):
        if self.u_b is None:
            return np.full(pts.shape[0], np.inf)
        return np.asarray(self.u_b(pts, t), float)

    def clamp(self, raw, pts, t):
        """Project raw values into the box; the lower bound wins where the
        printed bounds cross (matches the benchmark's optimum formula)."""
        return np.maximum(self.lower(pts, t),
                          np.minimum(self.upper(pts, t), raw))

    def validate(self, pts, t):
        bad = self.lower(pts, t) > self.upper(pts, t)
        if np.any(bad):
            raise InfeasibleBounds(
                f"lower bound exceeds upper bound at {int(bad.sum())} points, t={t}")


@dataclass
class ControlField:
    """Values at (interval, time Gauss node, interface quadrature point).

    The Gauss-node values feed the scheme's interval-averaged interface
    loads; ``knot_values`` carry the same field evaluated at the right
    knot of each interval, which is where errors against a closed-form
    optimum are measured.
    """

    values: np.ndarray        # (M, N_TIME_NODES, nq)
    grid: TimeGrid
    points: np.ndarray        # (nq, 2)
    weights: np.ndarray       # (nq,) interface quadrature weights
    knot_values: np.ndarray = None  # (M, nq)

    def __post_init__(self):
        if self.knot_values is None:
            self.knot_values = np.zeros((self.values.shape[0],
                                         self.values.shape[2]))

    def copy(self) -> "ControlField":
        return ControlField(self.values.copy(), self.grid, self.points,
                            self.weights, self.knot_values.copy())

    def norm(self) -> float:
        """Discrete space-time interface norm of the carried values."""
        per_node = np.einsum("ntq,q->nt", self.values ** 2, self.weights)
        return float(np.sqrt(np.sum(per_node) * self.grid.dt / N_TIME_NODES))

    def diff_norm(self, other: "ControlField") -> float:
        d = ControlField(self.values - other.values, self.grid,
                         self.points, self.weights)
        return d.norm()


def zero_control(ops: OperatorSet) -> ControlField:
    asm = ops.asm
    values = np.zeros((ops.grid.M, N_TIME_NODES, asm.ifc_pts.shape[0]))
    return ControlField(values, ops.grid, asm.ifc_pts.copy(), asm.ifc_w.copy())


def sample_control(ops: OperatorSet, fn) -> ControlField:
    """Control field from a closed-form function fn(pts, t)."""
    u = zero_control(ops)
    for n in range(1, ops.grid.M + 1):
        times, _ = ops.grid.gauss(n)
        for k, t in enumerate(times):
            u.values[n - 1, k] = fn(u.points, t)
        u.knot_values[n - 1] = fn(u.points, ops.grid.knot(n))
    return u


def project_admissible(bounds: AdmissibleSet, raw: ControlField,
                       grid: TimeGrid) -> ControlField:
    """Clamp every carried value into the box at its own point and time."""
    out = raw.copy()
    for n in range(1, grid.M + 1):
        times, _ = grid.gauss(n)
        for k, t in enumerate(times):
            out.values[n - 1, k] = bounds.clamp(raw.values[n - 1, k], raw.points, t)
        out.knot_values[n - 1] = bounds.clamp(raw.knot_values[n - 1], raw.points,
                                              grid.knot(n))
    return out


def control_from_adjoint(ops: OperatorSet, problem,
                         adjoint: Trajectory) -> ControlField:
    """Clamped scaled dual trace: the variational-discretization update."""
    u = zero_control(ops)
    asm = ops.asm
    for n in range(1, ops.grid.M + 1):
        raw = -asm.interface_trace(adjoint[n - 1]) / problem.alpha
        times, _ = ops.grid.gauss(n)
        for k, t in enumerate(times):
            u.values[n - 1, k] = problem.bounds.clamp(raw, u.points, t)
        u.knot_values[n - 1] = problem.bounds.clamp(raw, u.points,
                                                    ops.grid.knot(n))
    return u


def reduced_cost(problem, control: ControlField, state: Trajectory,
                 ops: OperatorSet) -> float:
    """Tracking misfit plus control penalty in the discrete norms."""
    asm, grid = ops.asm, ops.grid
    track = 0.0
    for n in range(1, grid.M + 1):
        times, tw = grid.gauss(n)
        vals = asm.B @ state[n]
        for t, wt in zip(times, tw):
            diff = vals - problem.y_d(asm.pts, t, asm.side)
            track += wt * np.sum(asm.w * diff * diff)
    penalty = control.norm() ** 2
    return 0.5 * track + 0.5 * problem.alpha * penalty


def reduced_gradient(problem, control: ControlField,
                     adjoint: Trajectory, ops: OperatorSet) -> ControlField:
    """Field alpha*u + dual trace on the control carrier."""
    g = control.copy()
    for n in range(1, ops.grid.M + 1):
        trace = ops.asm.interface_trace(adjoint[n - 1])
        g.values[n - 1] = problem.alpha * control.values[n - 1] + trace[None, :]
    return g


@dataclass
class OptimizerReport:
    iterations: int
    change_norms: List[float] = field(default_factory=list)
    cost: float = np.nan
    converged: bool = False


def fixed_point_solve(problem, ops: OperatorSet, init: Optional[ControlField] = None,
                      tol: float = 1e-10, max_iter: int = 200,
                      damping: float = 1.0):
    """Alternate projection of the dual trace with state/dual sweeps.

    Returns (control, state, adjoint, report); ``report.converged`` is
    False when max_iter is exhausted (no exception).  ``damping`` below 1
    relaxes the update u <- u + damping*(proposal - u) and is
    experimental; the plain iteration is the default.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    u = init.copy() if init is not None else project_admissible(
        problem.bounds, zero_control(ops), ops.grid)
    state = forward_solve(ops, problem, control=u)
    adjoint = adjoint_solve(ops, problem, state)

    report = OptimizerReport(iterations=0)
    for _ in range(max_iter):
        proposal = control_from_adjoint(ops, problem, adjoint)
        if damping < 1.0:
            proposal.values[:] = u.values + damping * (proposal.values - u.values)
        change = proposal.diff_norm(u) / max(proposal.norm(), 1.0)
        u = proposal
        state = forward_solve(ops, problem, control=u)
        adjoint = adjoint_solve(ops, problem, state)
        report.iterations += 1
        report.change_norms.append(change)
        if change <= tol:
            report.converged = True
            break
    report.cost = reduced_cost(problem, u, state, ops)
    return u, state, adjoint, report
