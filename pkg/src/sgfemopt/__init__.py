"""Optimal control of parabolic interface equations.

Solver library and convergence-study driver for tracking-type control
acting through the flux jump on an immersed interface: enriched linear
finite elements on an unfitted uniform mesh, implicit Euler in time, and
variational discretization of the control through the projected dual
trace.
"""

from . import analysis, assembly, control, geometry, mesh, problems, quadrature, space, timestepping
from .analysis import eoc, l2_interface_error, l2_space_time_error, run_case, self_convergence
from .control import AdmissibleSet, ControlField, fixed_point_solve, project_admissible, reduced_cost, reduced_gradient
from .geometry import LevelSetInterface, classify_element, decompose_cut_element, make_interface, one_sided_distance
from .linalg import linear_solve
from .mesh import TriMesh, build_uniform_mesh, locate_point
from .problems import ProblemSpec, build_problem, example1, example2, example3
from .space import SgfemSpace, apply_dirichlet, build_space, eval_basis
from .timestepping import OperatorSet, TimeGrid, Trajectory, adjoint_solve, forward_solve

__version__ = "0.1.0"

__all__ = [
    "AdmissibleSet", "ControlField", "LevelSetInterface", "OperatorSet",
    "ProblemSpec", "SgfemSpace", "TimeGrid", "Trajectory", "TriMesh",
    "adjoint_solve", "analysis", "apply_dirichlet", "assembly",
    "build_problem", "build_space", "build_uniform_mesh", "classify_element",
    "control", "decompose_cut_element", "eoc", "eval_basis", "example1",
    "example2", "example3", "fixed_point_solve", "forward_solve", "geometry",
    "l2_interface_error", "l2_space_time_error", "linear_solve",
    "locate_point", "make_interface", "mesh", "one_sided_distance",
    "problems", "project_admissible", "quadrature", "reduced_cost",
    "reduced_gradient", "run_case", "self_convergence", "space",
    "timestepping",
]
