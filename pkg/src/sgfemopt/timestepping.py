"""Backward Euler marching for the state and its backward-in-time dual.

Both equations share the operator M + dt*A, so one factorization built
by ``OperatorSet`` serves every forward and backward step of every outer
optimization sweep.
"""

import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quadrature
from .assembly import Assembler, ConstrainedSystem, elliptic_projection, get_assembler
from .linalg import linear_solve  # noqa: F401  (re-exported solve contract)
from .space import SgfemSpace, apply_dirichlet

# trajectories above this element count go to disk-backed storage
_MEMMAP_THRESHOLD = 120_000_000


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with M steps."""

    T: float
    M: int

    @property
    def dt(self) -> float:
        return self.T / self.M

    def knot(self, n: int) -> float:
        return self.T * n / self.M

    def gauss(self, n: int, npts: int = 2):
        """Gauss nodes/weights on the n-th interval (t_{n-1}, t_n]."""
        return quadrature.gauss_times(self.knot(n - 1), self.knot(n), npts)


@dataclass
class Trajectory:
    """Coefficient vectors over the time grid; index n is the knot t_n."""

    values: np.ndarray  # (M+1, ndofs)
    role: str           # "state" or "adjoint"
    _tmpdir: Optional[tempfile.TemporaryDirectory] = None

    def __getitem__(self, n: int) -> np.ndarray:
        return self.values[n]

    @property
    def steps(self) -> int:
        return self.values.shape[0] - 1


def _alloc_trajectory(n_steps: int, n_dofs: int):
    """Dense array, or a disk-backed one for very large runs."""
    if (n_steps + 1) * n_dofs <= _MEMMAP_THRESHOLD:
        return np.empty((n_steps + 1, n_dofs)), None
    tmpdir = tempfile.TemporaryDirectory(prefix="sgfemopt_traj_")
    path = os.path.join(tmpdir.name, "trajectory.npy")
    arr = np.lib.format.open_memmap(path, mode="w+",
                                    dtype=np.float64,
                                    shape=(n_steps + 1, n_dofs))
    return arr, tmpdir


class OperatorSet:
    """Matrices, constraint records and factorizations reused per run."""

    def __init__(self, space: SgfemSpace, beta_minus: float, beta_plus: float,
                 grid: TimeGrid, boundary_values=None):
        self.space = space
        self.grid = grid
        self.asm: Assembler = get_assembler(space)
        self.mass = self.asm.mass()
        self.stiffness = self.asm.stiffness(beta_minus, beta_plus)
        system_matrix = (self.mass + grid.dt * self.stiffness).tocsr()
        self.stepper = ConstrainedSystem(system_matrix, space.free_dofs,
                                         space.constrained_dofs)
        self._stiff_system = None
        self.state_bc = apply_dirichlet(space, boundary_values)
        self.adjoint_bc = apply_dirichlet(space, None)

    @property
    def stiff_system(self) -> ConstrainedSystem:
        """Factorized pure-stiffness system, built on first use only."""
        if self._stiff_system is None:
            self._stiff_system = ConstrainedSystem(
                self.stiffness, self.space.free_dofs, self.space.constrained_dofs)
        return self._stiff_system


def initial_state(ops: OperatorSet, problem) -> np.ndarray:
    """Discrete initial condition: energy projection of the initial field."""
    if problem.y0_grad is None:
        return np.zeros(ops.space.n_dofs)
    trace = None
    if problem.boundary_trace is not None:
        def trace(pts):
            return problem.boundary_trace(pts, 0.0)
    return elliptic_projection(
        ops.space,
        lambda pts, side: problem.y0_grad(pts, side),
        trace_w=trace,
        beta=(problem.beta_minus, problem.beta_plus),
        system=ops.stiff_system)


def forward_solve(ops: OperatorSet, problem, control=None,
                  y0: Optional[np.ndarray] = None) -> Trajectory:
    """March the state equation; the control enters the interface load."""
    space, grid, asm = ops.space, ops.grid, ops.asm
    dt = grid.dt
    Y, tmpdir = _alloc_trajectory(grid.M, space.n_dofs)
    Y[0] = initial_state(ops, problem) if y0 is None else y0

    static_f = asm.volume_load_at(problem.f, 0.0) if problem.static_data else None
    for n in range(1, grid.M + 1):
        load = static_f if static_f is not None \
            else asm.volume_load(problem.f, grid, n)
        gamma = _interface_source(problem, control, asm, grid, n)
        if gamma is not None:
            load = load + asm.interface_load_values(gamma)
        rhs = ops.mass @ Y[n - 1] + dt * load
        Y[n] = ops.stepper.solve(rhs, ops.state_bc.values(grid.knot(n)))
    return Trajectory(values=Y, role="state", _tmpdir=tmpdir)


def _interface_source(problem, control, asm, grid, n):
    """Interval average of g + u at the interface quadrature points."""
    if asm.ifc_pts.shape[0] == 0:
        return None
    times, tw = grid.gauss(n)
    acc = np.zeros(asm.ifc_pts.shape[0])
    for k, (t, wt) in enumerate(zip(times, tw)):
        vals = problem.g(asm.ifc_pts, t) if problem.g is not None else 0.0
        if control is not None:
            vals = vals + control.values[n - 1, k]
        acc += wt * vals
    return acc / grid.dt


def adjoint_solve(ops: OperatorSet, problem, state: Trajectory) -> Trajectory:
    """March the dual equation backward from a zero terminal value."""
    space, grid, asm = ops.space, ops.grid, ops.asm
    dt = grid.dt
    P, tmpdir = _alloc_trajectory(grid.M, space.n_dofs)
    P[grid.M] = 0.0
    zeros = ops.adjoint_bc.values(0.0)
    static_yd = asm.volume_load_at(problem.y_d, 0.0) if problem.static_data else None
    for n in range(grid.M, 0, -1):
        yd_load = static_yd if static_yd is not None \
            else asm.volume_load(problem.y_d, grid, n)
        rhs = ops.mass @ P[n] + dt * (ops.mass @ state[n] - yd_load)
        P[n - 1] = ops.stepper.solve(rhs, zeros)
    return Trajectory(values=P, role="adjoint", _tmpdir=tmpdir)


def adjoint_solve_with_source(ops: OperatorSet, source_loads) -> Trajectory:
    """Backward march driven by explicit per-interval dual loads.

    ``source_loads(n)`` returns the load vector replacing the tracking
    residual on interval n; used by duality checks.
    """
    grid = ops.grid
    P = np.zeros((grid.M + 1, ops.space.n_dofs))
    zeros = ops.adjoint_bc.values(0.0)
    for n in range(grid.M, 0, -1):
        rhs = ops.mass @ P[n] + grid.dt * source_loads(n)
        P[n - 1] = ops.stepper.solve(rhs, zeros)
    return Trajectory(values=P, role="adjoint")
