"""Benchmark problem definitions.

Three shipped configurations: a circle interface with a known optimal
triple and time-dependent bounds, a cubic interface crossing the outer
boundary (with and without control constraints), and a six-petal flower
with no closed-form solution.  Volume data, interface data, boundary
traces and initial fields are derived by hand from the closed-form
triples; the test suite certifies every derived expression against
finite differences before the solvers rely on them.

Field conventions: values take (pts, t, side) with side=-1/+1 selecting
the branch; interface fields take (pts, t).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import geometry
from .control import AdmissibleSet
from .geometry import LevelSetInterface


@dataclass
class ExactTriple:
    state: Callable            # (pts, t, side) -> values
    state_grad: Callable       # (pts, t, side) -> (n,2)
    adjoint: Callable
    adjoint_grad: Callable
    control: Callable          # (pts, t) -> values on the interface
    flux_jump: Callable        # (pts, t) -> [beta dn y] on the interface


@dataclass
class ProblemSpec:
    name: str
    interface: LevelSetInterface
    beta_minus: float
    beta_plus: float
    alpha: float
    T: float
    bounds: AdmissibleSet
    f: Callable
    y_d: Callable
    g: Optional[Callable]
    y0_grad: Optional[Callable]        # None means a zero initial field
    boundary_trace: Optional[Callable]  # None means homogeneous Dirichlet
    exact: Optional[ExactTriple] = None
    static_data: bool = False          # f and y_d independent of time

    def side_of(self, pts) -> np.ndarray:
        return np.where(self.interface.values(pts) > 0.0, 1, -1)


def _split(pts, t, side, minus_fn, plus_fn):
    pts = np.atleast_2d(pts)
    side = np.broadcast_to(np.asarray(side), (pts.shape[0],))
    out = np.empty(pts.shape[0])
    m = side < 0
    if m.any():
        out[m] = minus_fn(pts[m], t)
    if (~m).any():
        out[~m] = plus_fn(pts[~m], t)
    return out


def _split_vec(pts, t, side, minus_fn, plus_fn):
    pts = np.atleast_2d(pts)
    side = np.broadcast_to(np.asarray(side), (pts.shape[0],))
    out = np.empty((pts.shape[0], 2))
    m = side < 0
    if m.any():
        out[m] = minus_fn(pts[m], t)
    if (~m).any():
        out[~m] = plus_fn(pts[~m], t)
    return out


# ---------------------------------------------------------------------------
# circle benchmark
# ---------------------------------------------------------------------------

def example1(beta_minus: float = 1.0, beta_plus: float = 10.0,
             alpha: float = 1.0) -> ProblemSpec:
    r0 = 0.5
    r2 = r0 * r0
    ifc = geometry.circle_interface(r0)
    bm, bp = float(beta_minus), float(beta_plus)
    jump_c = 1.0 / (2.0 * r0)
    const_p = (1.0 / bm - 1.0 / bp) * r0 ** 3

    def s_of(p):
        return p[:, 0] ** 2 + p[:, 1] ** 2

    def y_minus(p, t):
        s = s_of(p)
        return np.exp(t) * (s ** 1.5 / bm + (s / r2 - 1.0) / (4.0 * bm))

    def y_plus(p, t):
        s = s_of(p)
        return np.exp(t) * (s ** 1.5 / bp + const_p)

    def gy_minus(p, t):
        s = s_of(p)
        fac = np.exp(t) * (3.0 * np.sqrt(s) + 0.5 / r2) / bm
        return fac[:, None] * p

    def gy_plus(p, t):
        s = s_of(p)
        fac = np.exp(t) * 3.0 * np.sqrt(s) / bp
        return fac[:, None] * p

    def f_minus(p, t):
        s = s_of(p)
        return y_minus(p, t) - np.exp(t) * (9.0 * np.sqrt(s) + 1.0 / r2)

    def f_plus(p, t):
        s = s_of(p)
        return y_plus(p, t) - np.exp(t) * 9.0 * np.sqrt(s)

    def _qparts(p):
        x1, x2 = p[:, 0], p[:, 1]
        A = x1 * x1 - 1.0
        B = x2 * x2 - 1.0
        S = x1 * x1 + x2 * x2 - r2
        return x1, x2, A, B, S

    def q_of(p):
        _, _, A, B, S = _qparts(p)
        return S * A * B

    def grad_q(p):
        x1, x2, A, B, S = _qparts(p)
        return np.column_stack([2.0 * x1 * B * (A + S), 2.0 * x2 * A * (B + S)])

    def lap_q(p):
        x1, x2, A, B, S = _qparts(p)
        return (2.0 * B * (A + S) + 8.0 * x1 * x1 * B
                + 2.0 * A * (B + S) + 8.0 * x2 * x2 * A)

    def p_branch(beta):
        def val(p, t):
            return (t - 1.0) * q_of(p) / beta

        def grad(p, t):
            return (t - 1.0) / beta * grad_q(p)
        return val, grad

    p_minus, gp_minus = p_branch(bm)
    p_plus, gp_plus = p_branch(bp)

    def yd_minus(p, t):
        return y_minus(p, t) + q_of(p) / bm + (t - 1.0) * lap_q(p)

    def yd_plus(p, t):
        return y_plus(p, t) + q_of(p) / bp + (t - 1.0) * lap_q(p)

    def u_a(p, t):
        return t * (np.sin(np.pi * p[:, 0]) - np.cos(np.pi * p[:, 1]))

    def u_b(p, t):
        return t * (p[:, 0] ** 2 + p[:, 1])

    bounds = AdmissibleSet(u_a=u_a, u_b=u_b)

    def exact_control(p, t):
        return bounds.clamp(np.zeros(p.shape[0]), p, t)

    def flux_jump(p, t):
        return np.full(p.shape[0], np.exp(t) * jump_c)

    def g(p, t):
        return flux_jump(p, t) - exact_control(p, t)

    exact = ExactTriple(
        state=lambda p, t, side: _split(p, t, side, y_minus, y_plus),
        state_grad=lambda p, t, side: _split_vec(p, t, side, gy_minus, gy_plus),
        adjoint=lambda p, t, side: _split(p, t, side, p_minus, p_plus),
        adjoint_grad=lambda p, t, side: _split_vec(p, t, side, gp_minus, gp_plus),
        control=exact_control,
        flux_jump=flux_jump,
    )
    return ProblemSpec(
        name="ex1", interface=ifc, beta_minus=bm, beta_plus=bp, alpha=alpha,
        T=1.0, bounds=bounds,
        f=lambda p, t, side: _split(p, t, side, f_minus, f_plus),
        y_d=lambda p, t, side: _split(p, t, side, yd_minus, yd_plus),
        g=g,
        y0_grad=lambda p, side: exact.state_grad(p, 0.0, side),
        boundary_trace=lambda p, t: y_plus(np.atleast_2d(p), t),
        exact=exact,
    )


# ---------------------------------------------------------------------------
# cubic benchmark
# ---------------------------------------------------------------------------

def example2(case: str = "unconstrained", beta_minus: float = 1.0,
             beta_plus: float = 10.0, alpha: float = 1.0) -> ProblemSpec:
    if case not in ("unconstrained", "constrained"):
        raise ValueError(f"unknown case {case!r}")
    ifc = geometry.cubic_interface()
    bm, bp = float(beta_minus), float(beta_plus)

    def phi(p):
        x1, x2 = p[:, 0], p[:, 1]
        return x2 - 3.0 * x1 ** 3 + 3.3 * x1 ** 2 - 0.72 * x1 - 0.38

    def Y_minus(p):
        return -3.0 * p[:, 0] ** 3 + p[:, 1] ** 2 - 0.38

    def Y_plus(p):
        x1, x2 = p[:, 0], p[:, 1]
        return -x2 + x2 ** 2 - 3.3 * x1 ** 2 + 0.72 * x1

    def gY_minus(p):
        return np.column_stack([-9.0 * p[:, 0] ** 2, 2.0 * p[:, 1]])

    def gY_plus(p):
        return np.column_stack([0.72 - 6.6 * p[:, 0], 2.0 * p[:, 1] - 1.0])

    def y_of(p, t, side):
        return np.cos(t - 1.0) * _split(p, 0.0, side,
                                        lambda q, _: Y_minus(q),
                                        lambda q, _: Y_plus(q))

    def gy_of(p, t, side):
        return np.cos(t - 1.0) * _split_vec(p, 0.0, side,
                                            lambda q, _: gY_minus(q),
                                            lambda q, _: gY_plus(q))

    def f_of(p, t, side):
        lapY = _split(p, 0.0, side,
                      lambda q, _: 2.0 - 18.0 * q[:, 0],
                      lambda q, _: np.full(q.shape[0], -4.6))
        beta = np.where(np.broadcast_to(side, (np.atleast_2d(p).shape[0],)) > 0, bp, bm)
        Y = _split(p, 0.0, side, lambda q, _: Y_minus(q), lambda q, _: Y_plus(q))
        return -np.sin(t - 1.0) * Y - beta * np.cos(t - 1.0) * lapY

    def _qparts(p):
        x1, x2 = p[:, 0], p[:, 1]
        A = x1 * x1 - 1.0
        B = x2 * x2 - 1.0
        return x1, x2, A, B, phi(p)

    def q_of(p):
        _, _, A, B, ph = _qparts(p)
        return ph * A * B

    def grad_q(p):
        x1, x2, A, B, ph = _qparts(p)
        phx = -9.0 * x1 ** 2 + 6.6 * x1 - 0.72
        return np.column_stack([phx * A * B + 2.0 * x1 * ph * B,
                                A * B + 2.0 * x2 * ph * A])

    def lap_q(p):
        x1, x2, A, B, ph = _qparts(p)
        phx = -9.0 * x1 ** 2 + 6.6 * x1 - 0.72
        return ((6.6 - 18.0 * x1) * A * B + 4.0 * x1 * phx * B
                + 2.0 * ph * (A + B) + 4.0 * x2 * A)

    def p_of(p, t, side):
        beta = np.where(np.broadcast_to(side, (np.atleast_2d(p).shape[0],)) > 0, bp, bm)
        return np.sin(t - 1.0) * q_of(p) / beta

    def gp_of(p, t, side):
        beta = np.where(np.broadcast_to(side, (np.atleast_2d(p).shape[0],)) > 0, bp, bm)
        return np.sin(t - 1.0) / beta[:, None] * grad_q(p)

    def yd_of(p, t, side):
        beta = np.where(np.broadcast_to(side, (np.atleast_2d(p).shape[0],)) > 0, bp, bm)
        return (y_of(p, t, side) + np.cos(t - 1.0) * q_of(p) / beta
                + np.sin(t - 1.0) * lap_q(p))

    def flux_jump(p, t):
        p = np.atleast_2d(p)
        n = ifc.normals(p)
        vec = bm * gY_minus(p) - bp * gY_plus(p)
        return np.cos(t - 1.0) * np.einsum("nd,nd->n", vec, n)

    if case == "unconstrained":
        bounds = AdmissibleSet()

        def exact_control(p, t):
            return np.zeros(np.atleast_2d(p).shape[0])

        name = "ex2c1"
    else:
        def u_a(p, t):
            x1, x2 = p[:, 0], p[:, 1]
            return t * (x2 - 3.0 * x1 ** 3 + 0.3 * x1 ** 2)

        def u_b(p, t):
            return np.ones(p.shape[0])

        bounds = AdmissibleSet(u_a=u_a, u_b=u_b)

        def exact_control(p, t):
            return np.maximum(u_a(np.atleast_2d(p), t), 0.0)

        name = "ex2c2"

    def g(p, t):
        return flux_jump(p, t) - exact_control(p, t)

    def boundary_trace(p, t):
        p = np.atleast_2d(p)
        side = np.where(ifc.values(p) > 0.0, 1, -1)
        return y_of(p, t, side)

    exact = ExactTriple(state=y_of, state_grad=gy_of, adjoint=p_of,
                        adjoint_grad=gp_of, control=exact_control,
                        flux_jump=flux_jump)
    return ProblemSpec(
        name=name, interface=ifc, beta_minus=bm, beta_plus=bp, alpha=alpha,
        T=1.0, bounds=bounds, f=f_of, y_d=yd_of, g=g,
        y0_grad=lambda p, side: gy_of(p, 0.0, side),
        boundary_trace=boundary_trace, exact=exact,
    )


# ---------------------------------------------------------------------------
# flower benchmark (no closed-form solution)
# ---------------------------------------------------------------------------

def example3(beta_minus: float = 1.0, beta_plus: float = 10.0,
             alpha: float = 1.0) -> ProblemSpec:
    ifc = geometry.flower_interface()

    def f(p, t, side):
        return np.ones(np.atleast_2d(p).shape[0])

    def y_d(p, t, side):
        side = np.broadcast_to(np.asarray(side), (np.atleast_2d(p).shape[0],))
        return np.where(side < 0, 10.0, 1.0)

    return ProblemSpec(
        name="ex3", interface=ifc, beta_minus=float(beta_minus),
        beta_plus=float(beta_plus), alpha=alpha, T=1.0,
        bounds=AdmissibleSet(), f=f, y_d=y_d, g=None,
        y0_grad=None, boundary_trace=None, exact=None, static_data=True,
    )


_BUILDERS = {
    "ex1": lambda bm, bp, al: example1(bm, bp, al),
    "ex2c1": lambda bm, bp, al: example2("unconstrained", bm, bp, al),
    "ex2c2": lambda bm, bp, al: example2("constrained", bm, bp, al),
    "ex3": lambda bm, bp, al: example3(bm, bp, al),
}


def build_problem(name: str, beta_minus: float = 1.0, beta_plus: float = 10.0,
                  alpha: float = 1.0) -> ProblemSpec:
    """Problem lookup by identifier: ex1, ex2c1, ex2c2, ex3."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; "
                         f"choose from {sorted(_BUILDERS)}") from None
    return builder(beta_minus, beta_plus, alpha)
