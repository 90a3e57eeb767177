"""Quadrature rules on the reference triangle and the unit segment.

Triangle rules are given in reference coordinates on the triangle with
vertices (0,0), (1,0), (0,1); weights sum to the reference area 1/2.
Segment rules live on [0,1] with weights summing to 1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedOrder


@dataclass(frozen=True)
class QuadRule:
    """Point set and positive weights on a reference domain."""

    points: np.ndarray   # (nq, dim) reference coordinates
    weights: np.ndarray  # (nq,)
    degree: int          # total polynomial degree integrated exactly

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")


_TRI_RULES = {}
_SEG_RULES = {}


def _build_tri_rules():
    # degree 2: three-point rule at (2/3,1/6,1/6) permutations
    pts2 = np.array([[2.0 / 3.0, 1.0 / 6.0],
                     [1.0 / 6.0, 2.0 / 3.0],
                     [1.0 / 6.0, 1.0 / 6.0]])
    w2 = np.full(3, 1.0 / 6.0)
    _TRI_RULES[2] = QuadRule(pts2, w2, 2)

    # degree 4: six-point rule (two orbits)
    a, wa = 0.816847572980459, 0.109951743655322
    b, wb = 0.108103018168070, 0.223381589678011
    a2 = (1.0 - a) / 2.0
    b2 = (1.0 - b) / 2.0
    pts4 = np.array([[a, a2], [a2, a], [a2, a2],
                     [b, b2], [b2, b], [b2, b2]])
    w4 = 0.5 * np.array([wa, wa, wa, wb, wb, wb])
    _TRI_RULES[4] = QuadRule(pts4, w4, 4)


def _build_seg_rules():
    # 2-point Gauss, exact through degree 3
    c = 0.5 / np.sqrt(3.0)
    _SEG_RULES[3] = QuadRule(np.array([0.5 - c, 0.5 + c])[:, None],
                             np.array([0.5, 0.5]), 3)
    # 3-point Gauss, exact through degree 5
    d = 0.5 * np.sqrt(3.0 / 5.0)
    _SEG_RULES[5] = QuadRule(np.array([0.5 - d, 0.5, 0.5 + d])[:, None],
                             np.array([5.0, 8.0, 5.0]) / 18.0, 5)


_build_tri_rules()
_build_seg_rules()


def element_rule(order: int) -> QuadRule:
    """Rule on the reference triangle exact for the given total degree."""
    try:
        return _TRI_RULES[order]
    except KeyError:
        raise UnsupportedOrder(f"triangle rule of degree {order} not available "
                               f"(have {sorted(_TRI_RULES)})") from None


def segment_rule(order: int) -> QuadRule:
    """Gauss rule on [0,1] exact for the given degree."""
    try:
        return _SEG_RULES[order]
    except KeyError:
        raise UnsupportedOrder(f"segment rule of degree {order} not available "
                               f"(have {sorted(_SEG_RULES)})") from None


def map_to_triangle(vertices: np.ndarray, rule: QuadRule):
    """Push a reference rule to the physical triangle (v0,v1,v2).

    Returns physical points (nq,2) and weights scaled by twice the
    triangle area (the affine Jacobian).
    """
    v0, v1, v2 = np.asarray(vertices, float)
    jac = np.column_stack([v1 - v0, v2 - v0])
    det = abs(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
    pts = rule.points @ jac.T + v0
    return pts, rule.weights * det


def map_to_segment(p0: np.ndarray, p1: np.ndarray, rule: QuadRule):
    """Push a [0,1] rule to the segment p0-p1; weights carry the length."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    t = rule.points[:, 0]
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    length = float(np.hypot(*(p1 - p0)))
    return pts, rule.weights * length


def cut_rule(decomposition, order: int):
    """Composite rule over the sub-triangles of a cut element, one per side.

    Returns ``{-1: (points, weights), +1: (points, weights)}``; a side
    without sub-triangles maps to empty arrays.  The union integrates
    constants to the parent area exactly because the sub-triangles
    partition the element.
    """
    rule = element_rule(order)
    out = {}
    for side in (-1, 1):
        pts_list, wts_list = [], []
        for tri, tri_side in zip(decomposition.sub_triangles,
                                 decomposition.sub_sides):
            if tri_side != side:
                continue
            p, w = map_to_triangle(tri, rule)
            pts_list.append(p)
            wts_list.append(w)
        if pts_list:
            out[side] = (np.vstack(pts_list), np.concatenate(wts_list))
        else:
            out[side] = (np.empty((0, 2)), np.empty(0))
    return out


def gauss_times(t0: float, t1: float, npts: int = 2):
    """Gauss nodes and weights on the time interval [t0, t1]."""
    rule = segment_rule(3 if npts == 2 else 5)
    t = t0 + rule.points[:, 0] * (t1 - t0)
    return t, rule.weights * (t1 - t0)
