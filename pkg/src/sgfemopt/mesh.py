"""Uniform triangulation of the square (-1,1)^2.

Each grid square is split along the bottom-left to top-right diagonal,
so all elements come in two congruent families (lower/upper).  Element
2*(i*N+j) is the lower triangle of square (i,j) and 2*(i*N+j)+1 the
upper one; node j + i*(N+1) sits at (-1 + 2j/N, -1 + 2i/N).
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain

XMIN, XMAX = -1.0, 1.0


@dataclass(frozen=True)
class TriMesh:
    N: int
    nodes: np.ndarray           # (n_nodes, 2)
    elements: np.ndarray        # (n_elems, 3) CCW vertex indices
    boundary_nodes: np.ndarray  # sorted indices on the square boundary
    h: float                    # grid spacing 2/N

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def element_vertices(self, elems=None) -> np.ndarray:
        """Vertex coordinates, shape (n, 3, 2)."""
        idx = self.elements if elems is None else self.elements[elems]
        return self.nodes[idx]

    def signed_areas(self) -> np.ndarray:
        v = self.element_vertices()
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_uniform_mesh(N: int) -> TriMesh:
    """N x N grid of squares, two triangles each."""
    if N < 2:
        raise ValueError("N must be at least 2")
    h = (XMAX - XMIN) / N
    # k/N hits 1.0 exactly at k=N, so boundary coordinates are exact
    coords_1d = XMIN + (XMAX - XMIN) * (np.arange(N + 1) / N)
    xx, yy = np.meshgrid(coords_1d, coords_1d)  # row i -> y, col j -> x
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    ii, jj = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    ll = ii * (N + 1) + jj
    lr = ll + 1
    ul = ll + (N + 1)
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    elements = np.empty((2 * N * N, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    on_bdry = (np.abs(nodes[:, 0] - XMIN) == 0) | (np.abs(nodes[:, 0] - XMAX) == 0) \
        | (np.abs(nodes[:, 1] - XMIN) == 0) | (np.abs(nodes[:, 1] - XMAX) == 0)
    boundary_nodes = np.flatnonzero(on_bdry)

    return TriMesh(N=N, nodes=nodes, elements=elements,
                   boundary_nodes=boundary_nodes, h=h)


def locate_point(mesh: TriMesh, x, tol: float = 1e-12):
    """Element index and barycentric coordinates of points in the domain.

    Accepts a single point or an (n,2) array.  Ties on shared edges and
    nodes resolve to the lowest containing element index.
    """
    pts = np.atleast_2d(np.asarray(x, float))
    if np.any(pts < XMIN - tol) or np.any(pts > XMAX + tol):
        raise OutOfDomain(f"point outside [{XMIN},{XMAX}]^2")
    pts = np.clip(pts, XMIN, XMAX)
    N, h = mesh.N, mesh.h

    fx = (pts[:, 0] - XMIN) / h
    fy = (pts[:, 1] - XMIN) / h
    j = np.minimum(fx.astype(np.int64), N - 1)
    i = np.minimum(fy.astype(np.int64), N - 1)
    xi = fx - j
    eta = fy - i

    # points exactly on a grid line also live in the lower-index square
    on_h = (eta == 0.0) & (i > 0)
    i = np.where(on_h, i - 1, i)
    eta = np.where(on_h, 1.0, eta)
    on_v = (xi == 0.0) & (j > 0)
    j = np.where(on_v, j - 1, j)
    xi = np.where(on_v, 1.0, xi)

    lower = eta <= xi
    elem = 2 * (i * N + j) + np.where(lower, 0, 1)
    # lower triangle (ll, lr, ur): lambda = (1-xi, xi-eta, eta)
    # upper triangle (ll, ur, ul): lambda = (1-eta, xi, eta-xi)
    lam = np.where(lower[:, None],
                   np.column_stack([1.0 - xi, xi - eta, eta]),
                   np.column_stack([1.0 - eta, xi, eta - xi]))
    lam = np.clip(lam, 0.0, 1.0)
    lam /= lam.sum(axis=1, keepdims=True)
    if np.asarray(x, float).ndim == 1:
        return int(elem[0]), lam[0]
    return elem, lam


def dump_mesh(mesh: TriMesh, path):
    """Plain-text node and element lists, one record per line."""
    with open(path, "w") as fh:
        fh.write(f"# nodes {mesh.n_nodes}\n")
        for k, (px, py) in enumerate(mesh.nodes):
            fh.write(f"{k} {px!r} {py!r}\n")
        fh.write(f"# elements {mesh.n_elements}\n")
        for k, (a, b, c) in enumerate(mesh.elements):
            fh.write(f"{k} {a} {b} {c}\n")
