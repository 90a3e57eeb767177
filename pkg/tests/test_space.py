import numpy as np
import pytest

from sgfemopt import apply_dirichlet, build_space, build_uniform_mesh, eval_basis, make_interface
from sgfemopt.geometry import CUT, classify_all, unsigned_distance
from sgfemopt.space import evaluation_matrix


class TestBuildSpace:
    def test_enriched_nodes_hug_interface(self, circle_space_8):
        sp = circle_space_8
        assert sp.n_enr > 0
        d = unsigned_distance(sp.interface, sp.mesh.nodes[sp.enr_nodes])
        assert d.max() <= 2 * sp.mesh.h

    def test_interface_outside_domain(self):
        mesh = build_uniform_mesh(8)
        sp = build_space(mesh, make_interface("circle", 10.0))
        assert sp.n_enr == 0
        assert sp.n_dofs == mesh.n_nodes
        assert len(sp.segments) == 0

    def test_dof_count_matches_direct_classification(self, circle_space_16):
        sp = circle_space_16
        mesh = sp.mesh
        assert mesh.n_nodes == 289
        # independent count: vertices of elements the classifier marks cut
        tags = classify_all(sp.interface, mesh)
        nodes = np.unique(mesh.elements[tags == CUT].ravel())
        assert sp.n_dofs == 289 + nodes.size
        assert np.array_equal(sp.enr_nodes, nodes)

    def test_nodal_distthan_zero_inside(self, circle_space_8):
        sp = circle_space_8
        inner = sp.interface.values(sp.mesh.nodes) <= 0
        assert np.all(sp.nodal_distance[inner] == 0.0)


class TestEvalBasis:
    def test_enrichment_vanishes_at_vertices(self, circle_space_8):
        sp = circle_space_8
        for e in sp.cut_elements[:6]:
            be = eval_basis(sp, int(e), np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
            enr_cols = be.active_dofs >= sp.n_std
            assert np.abs(be.values[:, enr_cols]).max() <= 1e-14

    def test_enrichment_vanishes_at_all_nodes(self, circle_space_8):
        # global sweep: every enrichment function at every mesh node
        sp = circle_space_8
        E = evaluation_matrix(sp, sp.mesh.nodes)
        enr_block = E[:, sp.n_std:]
        assert np.abs(enr_block.toarray()).max() <= 1e-14

    def test_partition_of_unity(self, circle_space_8):
        sp = circle_space_8
        rng = np.random.default_rng(0)
        for e in (0, 17, int(sp.cut_elements[0])):
            ref = rng.uniform(0, 0.5, size=(5, 2))
            be = eval_basis(sp, e, ref)
            std_cols = be.active_dofs < sp.n_std
            assert np.abs(be.values[:, std_cols].sum(axis=1) - 1.0).max() <= 1e-14
            assert np.abs(be.gradients[:, std_cols, :].sum(axis=1)).max() <= 1e-12

    def test_kronecker_property(self, circle_space_8):
        # nodal interpolation reproduces data exactly for hat coefficients
        sp = circle_space_8
        rng = np.random.default_rng(5)
        coeffs = np.zeros(sp.n_dofs)
        coeffs[:sp.n_std] = rng.standard_normal(sp.n_std)
        E = evaluation_matrix(sp, sp.mesh.nodes)
        assert np.abs(E @ coeffs - coeffs[:sp.n_std]).max() <= 1e-13

    def test_plain_element_has_three_active_dofs(self, circle_space_8):
        sp = circle_space_8
        enriched = sp.element_is_enriched(np.arange(sp.mesh.n_elements))
        plain = int(np.flatnonzero(~enriched)[0])
        be = eval_basis(sp, plain, np.array([0.3, 0.3]))
        assert be.active_dofs.size == 3

    def test_enrichment_gradient_finite_difference(self, circle_space_8):
        # one-sided central differences on the side not crossing the curve
        sp = circle_space_8
        mesh = sp.mesh
        e = int(sp.cut_elements[0])
        verts = mesh.element_vertices(e)
        jac = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
        ref = np.array([0.22, 0.31])
        x = verts[0] + jac @ ref
        side = 1 if sp.interface.values(x[None])[0] > 0 else -1
        base = eval_basis(sp, e, ref, side=side)
        eps = 1e-6
        for dim in range(2):
            dref = np.linalg.solve(jac, np.eye(2)[dim] * eps)
            up = eval_basis(sp, e, ref + dref, side=side)
            dn = eval_basis(sp, e, ref - dref, side=side)
            fd = (up.values[0] - dn.values[0]) / (2 * eps)
            assert np.abs(fd - base.gradients[0, :, dim]).max() <= 1e-6


class TestDirichlet:
    def test_homogeneous(self, circle_space_8):
        con = apply_dirichlet(circle_space_8, None)
        assert np.all(con.values(0.3) == 0.0)
        assert set(circle_space_8.mesh.boundary_nodes) <= set(con.dofs.tolist())

    def test_trace_values(self, circle_space_8, ex1_problem):
        sp = circle_space_8
        con = apply_dirichlet(sp, ex1_problem.boundary_trace)
        vals = con.values(0.0)
        corner = np.flatnonzero((sp.mesh.nodes[con.dofs[con.dofs < sp.n_std]]
                                 == [1.0, 1.0]).all(axis=1))
        want = ex1_problem.exact.state(np.array([[1.0, 1.0]]), 0.0, np.array([1]))[0]
        assert vals[corner[0]] == pytest.approx(want, abs=1e-14)

    def test_no_extra_enrichment_pins_for_interior_interface(self, circle_space_8):
        assert circle_space_8.pinned_enr_beyond_boundary.size == 0

    def test_boundary_enrichment_pinned_for_cubic(self):
        from sgfemopt import analysis
        sp = analysis.space_for(make_interface("cubic"), 16)
        enr_con = sp.constrained_dofs[sp.constrained_dofs >= sp.n_std]
        assert enr_con.size > 0  # curve crosses the outer boundary


def test_conditioning_growth_envelope():
    # recorded diagnostic: scaled stiffness conditioning grows like h^-2
    from sgfemopt import analysis
    from sgfemopt.assembly import conditioning_estimate
    conds = []
    for N in (8, 16, 32):
        sp = analysis.space_for(make_interface("circle", 0.5), N)
        conds.append(conditioning_estimate(sp, beta=(1.0, 10.0)))
    print("conditioning estimates:", conds)
    assert conds[2] <= 10.0 * conds[0] * 16.0
    assert all(np.isfinite(c) and c > 0 for c in conds)
