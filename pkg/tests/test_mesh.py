import numpy as np
import pytest

from sgfemopt import build_uniform_mesh, locate_point
from sgfemopt.errors import OutOfDomain
from sgfemopt.mesh import dump_mesh


def test_counts_n2():
    m = build_uniform_mesh(2)
    assert m.n_nodes == 9
    assert m.n_elements == 8
    assert m.boundary_nodes.size == 8


def test_counts_n8():
    m = build_uniform_mesh(8)
    assert m.n_nodes == 81
    assert m.n_elements == 128


@pytest.mark.parametrize("N", [2, 5, 12])
def test_total_area(N):
    m = build_uniform_mesh(N)
    assert m.signed_areas().sum() == pytest.approx(4.0, abs=1e-14)


def test_orientation_positive():
    m = build_uniform_mesh(7)
    areas = m.signed_areas()
    assert np.all(areas > 0)
    assert np.allclose(areas, areas[0])


def test_boundary_nodes_exact():
    m = build_uniform_mesh(12)
    maxnorm = np.max(np.abs(m.nodes), axis=1)
    assert np.array_equal(m.boundary_nodes, np.flatnonzero(maxnorm == 1.0))


def test_edge_conformity():
    m = build_uniform_mesh(6)
    counts = {}
    for tri in m.elements:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            key = tuple(sorted((tri[a], tri[b])))
            counts[key] = counts.get(key, 0) + 1
    assert set(counts.values()) <= {1, 2}
    boundary = [k for k, v in counts.items() if v == 1]
    # every boundary edge joins two boundary nodes
    bset = set(m.boundary_nodes.tolist())
    assert all(a in bset and b in bset for a, b in boundary)


def test_locate_corner():
    m = build_uniform_mesh(4)
    elem, lam = locate_point(m, np.array([-1.0, -1.0]))
    assert elem == 0
    vertex_hit = np.isclose(lam, 1.0).sum() == 1 and np.isclose(lam.sum(), 1.0)
    assert vertex_hit


def test_locate_centroid():
    m = build_uniform_mesh(4)
    verts = m.element_vertices(5)
    centroid = verts.mean(axis=0)
    elem, lam = locate_point(m, centroid)
    assert elem == 5
    assert np.allclose(lam, 1 / 3, atol=1e-12)


def test_locate_round_trip_random():
    m = build_uniform_mesh(9)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 1, size=(200, 2))
    elems, lam = locate_point(m, pts)
    rebuilt = np.einsum("nk,nkd->nd", lam, m.nodes[m.elements[elems]])
    assert np.abs(rebuilt - pts).max() < 1e-14


def test_locate_edge_tie_lowest_element():
    m = build_uniform_mesh(4)
    # interior grid node: all four squares around it contain the point
    node = np.array([0.0, 0.0])
    elem, _ = locate_point(m, node)
    containing = [e for e in range(m.n_elements)
                  if _inside(m.element_vertices(e), node)]
    assert elem == min(containing)


def _inside(verts, p, tol=1e-12):
    v0, v1, v2 = verts
    d = np.column_stack([v1 - v0, v2 - v0])
    xi, eta = np.linalg.solve(d, p - v0)
    return xi >= -tol and eta >= -tol and xi + eta <= 1 + tol


def test_locate_out_of_domain():
    m = build_uniform_mesh(4)
    with pytest.raises(OutOfDomain):
        locate_point(m, np.array([1.5, 0.0]))


def test_dump_mesh(tmp_path):
    m = build_uniform_mesh(2)
    path = tmp_path / "mesh.txt"
    dump_mesh(m, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "# nodes 9"
    assert len(lines) == 1 + 9 + 1 + 8
