"""Shared refinement oracles for the test suite."""

import numpy as np


def subdivide_triangle(verts):
    """One uniform quadrisection of a triangle."""
    v = np.asarray(verts, float)
    m01 = 0.5 * (v[0] + v[1])
    m12 = 0.5 * (v[1] + v[2])
    m20 = 0.5 * (v[2] + v[0])
    return [np.array([v[0], m01, m20]), np.array([m01, v[1], m12]),
            np.array([m20, m12, v[2]]), np.array([m01, m12, m20])]


def refined_triangle_quadrature(verts, levels=2, order=4):
    """Brute-force subdivision quadrature oracle on one triangle."""
    from sgfemopt.quadrature import element_rule, map_to_triangle
    tris = [np.asarray(verts, float)]
    for _ in range(levels):
        tris = [s for t in tris for s in subdivide_triangle(t)]
    rule = element_rule(order)
    pts, wts = zip(*(map_to_triangle(t, rule) for t in tris))
    return np.vstack(pts), np.concatenate(wts)


def refined_segment_quadrature(p0, p1, pieces=16, order=5):
    """Segment-refinement oracle: many short Gauss panels."""
    from sgfemopt.quadrature import map_to_segment, segment_rule
    rule = segment_rule(order)
    t = np.linspace(0.0, 1.0, pieces + 1)
    pts, wts = [], []
    for a, b in zip(t[:-1], t[1:]):
        qa = p0 + a * (p1 - p0)
        qb = p0 + b * (p1 - p0)
        p, w = map_to_segment(qa, qb, rule)
        pts.append(p)
        wts.append(w)
    return np.vstack(pts), np.concatenate(wts)
