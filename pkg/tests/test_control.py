import numpy as np
import pytest

from sgfemopt import analysis, make_interface
from sgfemopt.control import (AdmissibleSet, control_from_adjoint, fixed_point_solve,
                              project_admissible, reduced_cost, reduced_gradient,
                              sample_control, zero_control)
from sgfemopt.errors import InfeasibleBounds
from sgfemopt.problems import ProblemSpec, build_problem
from sgfemopt.timestepping import OperatorSet, TimeGrid, adjoint_solve, forward_solve


@pytest.fixture(scope="module")
def ops16(ex1_problem=None):
    prob = build_problem("ex1", 1.0, 10.0)
    space = analysis.space_for(prob.interface, 16)
    grid = TimeGrid(T=1.0, M=8)
    return prob, OperatorSet(space, 1.0, 10.0, grid,
                             boundary_values=prob.boundary_trace)


class TestProjection:
    def test_constant_bounds_clamp(self):
        box = AdmissibleSet(u_a=lambda p, t: -np.ones(p.shape[0]),
                            u_b=lambda p, t: np.ones(p.shape[0]))
        pts = np.zeros((2, 2))
        out = box.clamp(np.array([-2.0, 0.3]), pts, 0.0)
        assert np.allclose(out, [-1.0, 0.3])

    def test_example1_bounds_at_sample_point(self, ex1_problem):
        # direct evaluation of the bound formulas at (0.5, 0), t=1
        pts = np.array([[0.5, 0.0]])
        ua = ex1_problem.bounds.lower(pts, 1.0)[0]
        ub = ex1_problem.bounds.upper(pts, 1.0)[0]
        assert ua == pytest.approx(np.sin(np.pi * 0.5) - np.cos(0.0), abs=1e-15)
        assert ua == pytest.approx(0.0, abs=1e-15)
        assert ub == pytest.approx(0.25, abs=1e-15)
        assert ex1_problem.bounds.clamp(np.array([-0.5]), pts, 1.0)[0] == \
            pytest.approx(0.0, abs=1e-15)

    def test_example1_exact_control_formula(self, ex1_problem):
        pts = np.array([[0.5, 0.0]])
        assert ex1_problem.exact.control(pts, 1.0)[0] == pytest.approx(0.0, abs=1e-15)

    def test_idempotent(self, ops16):
        prob, ops = ops16
        raw = zero_control(ops)
        rng = np.random.default_rng(0)
        raw.values[:] = rng.standard_normal(raw.values.shape)
        once = project_admissible(prob.bounds, raw, ops.grid)
        twice = project_admissible(prob.bounds, once, ops.grid)
        assert np.array_equal(once.values, twice.values)

    def test_nonexpansive(self, ops16):
        prob, ops = ops16
        rng = np.random.default_rng(1)
        a = zero_control(ops)
        b = zero_control(ops)
        a.values[:] = rng.standard_normal(a.values.shape)
        b.values[:] = rng.standard_normal(b.values.shape)
        pa = project_admissible(prob.bounds, a, ops.grid)
        pb = project_admissible(prob.bounds, b, ops.grid)
        assert pa.diff_norm(pb) <= a.diff_norm(b) + 1e-12

    def test_infeasible_bounds_detected_by_validate(self, ex1_problem):
        # the printed bounds cross on part of the curve; validate() reports it
        pts = np.array([[0.0, -0.5]])
        with pytest.raises(InfeasibleBounds):
            ex1_problem.bounds.validate(pts, 1.0)


class TestCostAndGradient:
    def test_cost_zero_at_target(self):
        # u=0 and a state meeting the target exactly
        ifc = make_interface("circle", 0.5)
        z = lambda p, t, s: np.zeros(np.atleast_2d(p).shape[0])
        prob = ProblemSpec(name="z", interface=ifc, beta_minus=1.0, beta_plus=10.0,
                           alpha=1.0, T=1.0, bounds=AdmissibleSet(), f=z, y_d=z,
                           g=None, y0_grad=None, boundary_trace=None, exact=None)
        space = analysis.space_for(ifc, 8)
        ops = OperatorSet(space, 1.0, 10.0, TimeGrid(T=1.0, M=4))
        u = zero_control(ops)
        Y = forward_solve(ops, prob, control=u)
        assert reduced_cost(prob, u, Y, ops) == 0.0

    def test_cost_of_constant_state(self):
        # state fixed at 1, target 0, T=1: half the domain area
        ifc = make_interface("circle", 0.5)
        z = lambda p, t, s: np.zeros(np.atleast_2d(p).shape[0])
        prob = ProblemSpec(name="c", interface=ifc, beta_minus=1.0, beta_plus=10.0,
                           alpha=1.0, T=1.0, bounds=AdmissibleSet(), f=z, y_d=z,
                           g=None, y0_grad=None, boundary_trace=None, exact=None)
        space = analysis.space_for(ifc, 8)
        ops = OperatorSet(space, 1.0, 10.0, TimeGrid(T=1.0, M=4))
        u = zero_control(ops)
        from sgfemopt.timestepping import Trajectory
        vals = np.zeros((5, space.n_dofs))
        vals[:, :space.n_std] = 1.0
        Y = Trajectory(values=vals, role="state")
        assert reduced_cost(prob, u, Y, ops) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_gradient_against_central_differences(self, ops16, seed):
        prob, ops = ops16
        rng = np.random.default_rng(seed)
        u = project_admissible(prob.bounds, zero_control(ops), ops.grid)
        u.values += 0.05 * rng.standard_normal(u.values.shape)
        du = zero_control(ops)
        du.values[:] = rng.standard_normal(du.values.shape)

        Y = forward_solve(ops, prob, control=u)
        P = adjoint_solve(ops, prob, Y)
        g = reduced_gradient(prob, u, P, ops)
        pairing = float(np.einsum("ntq,q->", g.values * du.values, g.weights)
                        * ops.grid.dt / du.values.shape[1])

        eps = 1e-4
        up = u.copy(); up.values += eps * du.values
        dn = u.copy(); dn.values -= eps * du.values
        Jp = reduced_cost(prob, up, forward_solve(ops, prob, control=up), ops)
        Jm = reduced_cost(prob, dn, forward_solve(ops, prob, control=dn), ops)
        fd = (Jp - Jm) / (2 * eps)
        assert pairing == pytest.approx(fd, rel=1e-5)


class TestFixedPoint:
    def test_trivial_fixed_point_converges_immediately(self):
        # target chosen so the optimum is u=0 with inactive bounds
        ifc = make_interface("circle", 0.5)
        z = lambda p, t, s: np.zeros(np.atleast_2d(p).shape[0])
        prob = ProblemSpec(name="z", interface=ifc, beta_minus=1.0, beta_plus=10.0,
                           alpha=1.0, T=1.0,
                           bounds=AdmissibleSet(u_a=lambda p, t: -np.ones(p.shape[0]),
                                                u_b=lambda p, t: np.ones(p.shape[0])),
                           f=z, y_d=z, g=None, y0_grad=None,
                           boundary_trace=None, exact=None)
        space = analysis.space_for(ifc, 8)
        ops = OperatorSet(space, 1.0, 10.0, TimeGrid(T=1.0, M=4))
        u, Y, P, report = fixed_point_solve(prob, ops, tol=1e-12, max_iter=10)
        assert report.converged
        assert report.iterations == 1
        assert report.change_norms[0] == 0.0
        assert np.abs(u.values).max() == 0.0

    def test_not_converged_reported(self, ops16):
        prob, ops = ops16
        u, Y, P, report = fixed_point_solve(prob, ops, tol=1e-16, max_iter=2)
        assert not report.converged
        assert report.iterations == 2

    def test_converged_solution_is_projected_trace(self, ops16):
        prob, ops = ops16
        u, Y, P, report = fixed_point_solve(prob, ops, tol=1e-11, max_iter=50)
        assert report.converged
        again = control_from_adjoint(ops, prob, P)
        assert np.abs(again.values - u.values).max() <= 1e-10

    def test_discrete_optimality_inequality(self, ops16):
        # the optimum beats 10 random admissible fields in the first-order test
        prob, ops = ops16
        u, Y, P, report = fixed_point_solve(prob, ops, tol=1e-11, max_iter=50)
        g = reduced_gradient(prob, u, P, ops)
        rng = np.random.default_rng(9)
        for _ in range(10):
            v = zero_control(ops)
            v.values[:] = rng.standard_normal(v.values.shape)
            v = project_admissible(prob.bounds, v, ops.grid)
            pairing = float(np.einsum("ntq,q->", g.values * (v.values - u.values),
                                      g.weights) * ops.grid.dt / u.values.shape[1])
            assert pairing >= -1e-9

    def test_rejects_bad_tolerance(self, ops16):
        prob, ops = ops16
        with pytest.raises(ValueError):
            fixed_point_solve(prob, ops, tol=-1.0)

    def test_unconstrained_gradient_vanishes_at_optimum(self):
        prob = build_problem("ex2c1", 1.0, 10.0)
        space = analysis.space_for(prob.interface, 16)
        ops = OperatorSet(space, 1.0, 10.0, TimeGrid(T=1.0, M=8),
                          boundary_values=prob.boundary_trace)
        u, Y, P, report = fixed_point_solve(prob, ops, tol=1e-12, max_iter=60)
        assert report.converged
        g = reduced_gradient(prob, u, P, ops)
        assert g.norm() <= 1e-6
