"""Enriched approximation space on the unfitted mesh.

The space joins the standard nodal hat basis with one enrichment
function per node of every cut element: hat(i) * (dist - interp(dist)),
where dist is the one-sided distance to the interface and interp(dist)
its piecewise-linear nodal interpolant.  The subtraction makes every
enrichment function vanish at all mesh nodes, which keeps the stiffness
conditioning comparable to plain linear elements.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import geometry
from .geometry import CUT, INSIDE_MINUS, LevelSetInterface
from .mesh import TriMesh, locate_point

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

# distance field backing the enrichment at quadrature points:
#   polyline       distance to the straight-segment interface
#   curve_signed   signed curve distance extended smoothly across the chords
#   curve_onesided honest one-sided curve distance
DISTANCE_MODE = "polyline"


@dataclass
class SgfemSpace:
    mesh: TriMesh
    interface: LevelSetInterface
    element_tags: np.ndarray          # per element: CUT / INSIDE_MINUS / INSIDE_PLUS
    cut_elements: np.ndarray
    decompositions: dict              # cut element -> CutDecomposition
    segments: list                    # (element, (2,2) endpoints), clipped to the square
    enr_nodes: np.ndarray             # sorted node indices carrying enrichment
    enr_dof_of_node: np.ndarray       # node -> enrichment dof id, -1 when absent
    nodal_distance: np.ndarray        # one-sided distance at every node
    constrained_dofs: np.ndarray      # sorted: boundary std + pinned enrichment
    pinned_enr_beyond_boundary: np.ndarray  # diagnostics for boundary-cut pinning
    polyline: object = None           # discrete interface used for enrichment

    def plus_distance(self, pts) -> np.ndarray:
        """Enrichment distance on the outer side.

        Measured against the straight-segment interface so the kink of the
        enrichment aligns exactly with the cut sub-triangulation; differs
        from the curve distance by the chord sagitta, below scheme order.
        """
        if self.polyline is None:
            return geometry.unsigned_distance(self.interface, pts)
        return self.polyline.query(pts)[0]

    def plus_direction(self, pts) -> np.ndarray:
        x = np.atleast_2d(np.asarray(pts, float))
        if self.polyline is None:
            return geometry.distance_gradient(self.interface, x)
        dist, foot = self.polyline.query(x)
        d = x - foot
        tiny = dist <= 1e-13
        if tiny.any():
            d[tiny] = self.interface.normals(x[tiny])
            dist = dist.copy()
            dist[tiny] = np.hypot(*d[tiny].T)
        return d / dist[:, None]

    def side_of(self, pts) -> np.ndarray:
        """Side of the discrete interface, matching the cut-cell tags.

        Sign of the offset from the nearest chord (level-set sign where no
        chords exist); points on the chords count as inner, where the
        one-sided distance vanishes anyway.
        """
        x = np.atleast_2d(np.asarray(pts, float))
        if self.polyline is None:
            return np.where(self.interface.values(x) > 0.0, 1, -1)
        _, foot = self.polyline.query(x)
        outward = self.interface.gradients(foot)
        dot = np.einsum("nd,nd->n", x - foot, outward)
        return np.where(dot > 0.0, 1, -1)

    @property
    def n_std(self) -> int:
        return self.mesh.n_nodes

    @property
    def n_enr(self) -> int:
        return self.enr_nodes.size

    @property
    def n_dofs(self) -> int:
        return self.n_std + self.n_enr

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    def element_is_enriched(self, elems) -> np.ndarray:
        return np.any(self.enr_dof_of_node[self.mesh.elements[elems]] >= 0, axis=-1)


@dataclass
class BasisEval:
    """Basis values and gradients at points of one element."""

    active_dofs: np.ndarray   # (m,)
    values: np.ndarray        # (npts, m)
    gradients: np.ndarray     # (npts, m, 2)


def build_space(mesh: TriMesh, interface: LevelSetInterface) -> SgfemSpace:
    tags = geometry.classify_all(interface, mesh)
    cut_elements = np.flatnonzero(tags == CUT)

    decompositions = {}
    segments = []
    for e in cut_elements:
        dec = geometry.decompose_cut_element(interface, mesh.element_vertices(int(e)),
                                             h=mesh.h)
        decompositions[int(e)] = dec
        for seg in geometry.clip_segments_to_box(dec.interface_segments):
            segments.append((int(e), seg))

    enr_nodes = np.unique(mesh.elements[cut_elements].ravel()) if cut_elements.size \
        else np.empty(0, dtype=np.int64)
    enr_dof_of_node = np.full(mesh.n_nodes, -1, dtype=np.int64)
    enr_dof_of_node[enr_nodes] = mesh.n_nodes + np.arange(enr_nodes.size)

    polyline = geometry.PolylineDistance([seg for _, seg in segments]) \
        if segments else None
    node_signs = interface.signs(mesh.nodes, mesh.h)
    nodal_distance = np.zeros(mesh.n_nodes)
    outer = node_signs > 0
    if outer.any():
        if polyline is not None:
            nodal_distance[outer] = polyline.query(mesh.nodes[outer])[0]
        else:
            nodal_distance[outer] = geometry.one_sided_distance(interface,
                                                                mesh.nodes[outer])

    constrained = set(mesh.boundary_nodes.tolist())
    boundary_set = set(mesh.boundary_nodes.tolist())
    pinned_extra = set()
    for i in enr_nodes:
        if int(i) in boundary_set:
            constrained.add(int(enr_dof_of_node[i]))
    # enrichment with support on a boundary edge crossed by the interface
    # must vanish to keep the trace conforming; for linear hats these dofs
    # coincide with the boundary-node pins, recorded here for diagnostics
    for e in cut_elements:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            na, nb = mesh.elements[e, a], mesh.elements[e, b]
            if int(na) in boundary_set and int(nb) in boundary_set:
                va, vb = interface.values(mesh.nodes[[na, nb]])
                sa = 1 if va >= geometry.VERTEX_TIE_FACTOR * mesh.h else -1
                sb = 1 if vb >= geometry.VERTEX_TIE_FACTOR * mesh.h else -1
                if sa != sb:
                    for n in (na, nb):
                        dof = int(enr_dof_of_node[n])
                        if dof < 0:
                            continue
                        if dof not in constrained:
                            pinned_extra.add(dof)
                        constrained.add(dof)

    return SgfemSpace(
        mesh=mesh, interface=interface, element_tags=tags,
        cut_elements=cut_elements, decompositions=decompositions,
        segments=segments, enr_nodes=enr_nodes, enr_dof_of_node=enr_dof_of_node,
        nodal_distance=nodal_distance,
        constrained_dofs=np.array(sorted(constrained), dtype=np.int64),
        pinned_enr_beyond_boundary=np.array(sorted(pinned_extra), dtype=np.int64),
        polyline=polyline,
    )


def hat_gradients(vertices: np.ndarray) -> np.ndarray:
    """Constant gradients of the three hats; vertices shaped (..., 3, 2)."""
    v = np.asarray(vertices, float)
    d1 = v[..., 1, :] - v[..., 0, :]
    d2 = v[..., 2, :] - v[..., 0, :]
    det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    grads = np.empty(v.shape)
    for k in range(3):
        edge = v[..., (k + 2) % 3, :] - v[..., (k + 1) % 3, :]
        grads[..., k, 0] = -edge[..., 1]
        grads[..., k, 1] = edge[..., 0]
    return grads / det[..., None, None]


def basis_tables(space: SgfemSpace, elems, lam, side, need_gradients=True,
                 dtilde=None, grad_dtilde=None):
    """Vectorized basis data for a batch of points grouped by element.

    Parameters: element index, barycentric coordinates (n,3) and side tag
    (n,) per point.  ``dtilde``/``grad_dtilde`` override the one-sided
    distance and its direction (used for points pinned onto the interface
    polyline).  Returns (cols, values, gradients) with shapes
    (n, m), (n, m), (n, m, 2) where m = 3 or 6 columns per point; unused
    enrichment columns carry dof -1 with zero value.
    """
    mesh = space.mesh
    elems = np.asarray(elems, dtype=np.int64)
    lam = np.asarray(lam, float)
    n = elems.size
    conn = mesh.elements[elems]                  # (n,3)
    verts = mesh.nodes[conn]                     # (n,3,2)
    pts = np.einsum("nk,nkd->nd", lam, verts)

    enr_dofs = space.enr_dof_of_node[conn]       # (n,3), -1 where absent
    has_enr = np.any(enr_dofs >= 0, axis=1)

    cols = np.full((n, 6), -1, dtype=np.int64)
    vals = np.zeros((n, 6))
    cols[:, :3] = conn
    vals[:, :3] = lam

    grads = None
    hatg = None
    if need_gradients:
        grads = np.zeros((n, 6, 2))
        hatg = hat_gradients(verts)              # (n,3,2)
        grads[:, :3, :] = hatg

    if has_enr.any():
        idx = np.flatnonzero(has_enr)
        d_nodal = space.nodal_distance[conn[idx]]            # (k,3)
        interp = np.einsum("nk,nk->n", lam[idx], d_nodal)

        side_idx = np.asarray(side)[idx]
        dt = np.zeros(idx.size)
        plus = side_idx > 0
        gdt = np.zeros((idx.size, 2)) if need_gradients else None
        if dtilde is not None:
            dt = np.asarray(dtilde, float)[idx]
            if need_gradients and grad_dtilde is not None:
                gdt = np.asarray(grad_dtilde, float)[idx]
        elif plus.any():
            ppts = pts[idx[plus]]
            if DISTANCE_MODE == "polyline":
                dt[plus] = space.plus_distance(ppts)
                if need_gradients:
                    gdt[plus] = space.plus_direction(ppts)
            elif DISTANCE_MODE == "curve_signed":
                sgn = np.where(space.interface.values(ppts) >= 0.0, 1.0, -1.0)
                dt[plus] = sgn * geometry.unsigned_distance(space.interface, ppts)
                if need_gradients:
                    gdt[plus] = sgn[:, None] * geometry.distance_gradient(
                        space.interface, ppts)
            else:  # curve_onesided
                mask = space.interface.values(ppts) > 0.0
                dvals = np.zeros(ppts.shape[0])
                dvals[mask] = geometry.unsigned_distance(space.interface, ppts[mask])
                dt[plus] = dvals
                if need_gradients:
                    gvals = np.zeros((ppts.shape[0], 2))
                    gvals[mask] = geometry.distance_gradient(space.interface,
                                                             ppts[mask])
                    gdt[plus] = gvals
        diff = dt - interp                                    # (k,)

        if need_gradients:
            ginterp = np.einsum("nk,nkd->nd", d_nodal, hatg[idx])
            gdiff = gdt - ginterp                             # (k,2)

        for k in range(3):
            active = enr_dofs[idx, k] >= 0
            rows = idx[active]
            cols[rows, 3 + k] = enr_dofs[idx, k][active]
            vals[rows, 3 + k] = lam[rows, k] * diff[active]
            if need_gradients:
                grads[rows, 3 + k, :] = (hatg[rows, k, :] * diff[active][:, None]
                                         + lam[rows, k][:, None] * gdiff[active])
    return cols, vals, grads


def eval_basis(space: SgfemSpace, element: int, reference_point,
               side=None) -> BasisEval:
    """Pointwise basis evaluation on one element.

    ``reference_point`` is one point or an (n,2) batch in the reference
    triangle; the branch of the one-sided distance defaults to the sign
    of the level set at each point.
    """
    ref = np.atleast_2d(np.asarray(reference_point, float))
    lam = np.column_stack([1.0 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]])
    verts = space.mesh.element_vertices(int(element))
    pts = lam @ verts
    if side is None:
        side = np.where(space.interface.values(pts) > 0.0, 1, -1)
    else:
        side = np.broadcast_to(np.asarray(side), (ref.shape[0],))
    elems = np.full(ref.shape[0], int(element), dtype=np.int64)
    cols, vals, grads = basis_tables(space, elems, lam, side)

    active = np.unique(cols[cols >= 0])
    pos = {int(d): k for k, d in enumerate(active)}
    values = np.zeros((ref.shape[0], active.size))
    gradients = np.zeros((ref.shape[0], active.size, 2))
    for j in range(6):
        live = cols[:, j] >= 0
        for r in np.flatnonzero(live):
            c = pos[int(cols[r, j])]
            values[r, c] += vals[r, j]
            gradients[r, c] += grads[r, j]
    return BasisEval(active_dofs=active, values=values, gradients=gradients)


def evaluation_matrix(space: SgfemSpace, points) -> sp.csr_matrix:
    """Sparse map from coefficient vectors to point values, (npts, ndofs).

    Sides follow the discrete interface so evaluation agrees exactly with
    the assembled quadrature representation of the same coefficients.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    elems, lam = locate_point(space.mesh, pts)
    side = space.side_of(pts)
    cols, vals, _ = basis_tables(space, elems, lam, side, need_gradients=False)
    rows = np.repeat(np.arange(pts.shape[0]), 6)
    keep = cols.ravel() >= 0
    mat = sp.coo_matrix((vals.ravel()[keep],
                         (rows[keep], cols.ravel()[keep])),
                        shape=(pts.shape[0], space.n_dofs))
    return mat.tocsr()


@dataclass
class DirichletConstraints:
    """Constrained dof set with time-dependent values."""

    dofs: np.ndarray
    values: Callable[[float], np.ndarray]


def apply_dirichlet(space: SgfemSpace,
                    boundary_values: Optional[Callable] = None) -> DirichletConstraints:
    """Pin boundary dofs; standard dofs take the trace, enrichment takes 0.

    ``boundary_values`` maps (points, t) to trace values; None means the
    homogeneous case.
    """
    dofs = space.constrained_dofs
    std = dofs[dofs < space.n_std]
    std_coords = space.mesh.nodes[std]
    n_std_con = std.size
    total = dofs.size

    if boundary_values is None:
        zero = np.zeros(total)

        def values(t: float) -> np.ndarray:
            return zero
    else:
        def values(t: float) -> np.ndarray:
            out = np.zeros(total)
            out[:n_std_con] = boundary_values(std_coords, t)
            return out

    return DirichletConstraints(dofs=dofs, values=values)
