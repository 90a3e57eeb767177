import numpy as np
import pytest

from sgfemopt import geometry, make_interface
from sgfemopt.errors import UnsupportedOrder
from sgfemopt.quadrature import (cut_rule, element_rule, gauss_times, map_to_segment,
                                 map_to_triangle, segment_rule)


def tri_monomial(p, q):
    """Closed-form integral of x^p y^q over the reference triangle."""
    from math import factorial
    return factorial(p) * factorial(q) / factorial(p + q + 2)


def integrate_tri(rule, fn):
    x, y = rule.points[:, 0], rule.points[:, 1]
    return float(np.sum(rule.weights * fn(x, y)))


class TestElementRule:
    def test_degree2_linear_moment(self):
        assert integrate_tri(element_rule(2), lambda x, y: x) == pytest.approx(1 / 6, abs=1e-15)

    def test_degree2_xy_moment(self):
        assert integrate_tri(element_rule(2), lambda x, y: x * y) == pytest.approx(1 / 24, abs=1e-15)

    def test_degree4_quartic_moment(self):
        # closed-form monomial integral over the reference triangle
        assert tri_monomial(4, 0) == pytest.approx(1 / 30, abs=1e-18)
        assert integrate_tri(element_rule(4), lambda x, y: x ** 4) == \
            pytest.approx(1 / 30, abs=1e-14)

    def test_full_exactness_degree(self):
        for order in (2, 4):
            rule = element_rule(order)
            for p in range(order + 1):
                for q in range(order + 1 - p):
                    got = integrate_tri(rule, lambda x, y: x ** p * y ** q)
                    assert got == pytest.approx(tri_monomial(p, q), abs=1e-14)

    def test_weights_positive_and_sum(self):
        for order in (2, 4):
            rule = element_rule(order)
            assert np.all(rule.weights > 0)
            assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)

    def test_unsupported_order(self):
        with pytest.raises(UnsupportedOrder):
            element_rule(3)


class TestSegmentRule:
    def test_order3_moments(self):
        rule = segment_rule(3)
        t = rule.points[:, 0]
        assert float(np.sum(rule.weights * t ** 2)) == pytest.approx(1 / 3, abs=1e-15)
        assert float(np.sum(rule.weights * t ** 3)) == pytest.approx(1 / 4, abs=1e-15)

    def test_order5_moments(self):
        rule = segment_rule(5)
        t = rule.points[:, 0]
        for p in range(6):
            assert float(np.sum(rule.weights * t ** p)) == \
                pytest.approx(1 / (p + 1), abs=1e-15)

    def test_unsupported_order(self):
        with pytest.raises(UnsupportedOrder):
            segment_rule(4)

    def test_circle_circumference(self):
        # analytic circumference oracle at mesh 64
        from sgfemopt import analysis
        space = analysis.space_for(make_interface("circle", 0.5), 64)
        rule = segment_rule(3)
        total = 0.0
        for _, seg in space.segments:
            _, w = map_to_segment(seg[0], seg[1], rule)
            total += w.sum()
        assert total == pytest.approx(np.pi, rel=1e-3)


class TestCutRule:
    def setup_method(self):
        self.ifc = make_interface("circle", 0.5)
        verts = np.array([[0.4, -0.1], [0.65, -0.1], [0.4, 0.15]])
        self.verts = verts
        self.dec = geometry.decompose_cut_element(self.ifc, verts)

    def test_constant_recovers_parent_area(self):
        rules = cut_rule(self.dec, 4)
        total = sum(w.sum() for _, w in rules.values())
        area = 0.5 * 0.25 * 0.25
        assert total == pytest.approx(area, rel=1e-14)

    def test_piecewise_constant_conductivity(self):
        # polygon-clipping closed form: sum beta-weighted sub-areas
        rules = cut_rule(self.dec, 4)
        got = 1.0 * rules[-1][1].sum() + 10.0 * rules[1][1].sum()
        areas = self.dec.areas()
        want = sum((10.0 if s > 0 else 1.0) * a
                   for s, a in zip(self.dec.sub_sides, areas))
        assert got == pytest.approx(want, rel=1e-12)

    def test_linear_integrand_vs_subdivision_oracle(self):
        from helpers import refined_triangle_quadrature
        rules = cut_rule(self.dec, 4)
        fn = lambda p: 2.0 * p[:, 0] - 0.5 * p[:, 1] + 0.25
        got = sum(float(np.sum(w * fn(p))) for p, w in rules.values())
        want = 0.0
        for tri in self.dec.sub_triangles:
            pts, wts = refined_triangle_quadrature(tri, levels=3)
            want += float(np.sum(wts * fn(pts)))
        assert got == pytest.approx(want, abs=1e-10)

    def test_all_weights_positive(self):
        rules = cut_rule(self.dec, 4)
        for _, w in rules.values():
            assert np.all(w > 0)

    def test_trivial_partition_matches_plain_rule(self):
        verts = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]])
        dec = geometry.CutDecomposition([verts], [1], [])
        rules = cut_rule(dec, 2)
        pts, wts = map_to_triangle(verts, element_rule(2))
        assert np.allclose(rules[1][0], pts)
        assert np.allclose(rules[1][1], wts)
        assert rules[-1][1].size == 0


def test_gauss_times_cover_interval():
    t, w = gauss_times(0.25, 0.5)
    assert np.all((t > 0.25) & (t < 0.5))
    assert w.sum() == pytest.approx(0.25, abs=1e-15)
