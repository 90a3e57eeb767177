"""Matrix and load assembly over the enriched space.

An Assembler precomputes one global volume quadrature (plain rule on
uninvolved elements, refined rule on cut sub-triangles and on outer
elements carrying enrichment) and one interface quadrature over the
segment polyline, together with sparse basis evaluation matrices at all
of those points.  Every matrix and load is then a sparse sandwich or a
weighted transpose product, which keeps repeated per-time-step assembly
cheap and byte-for-byte deterministic.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg, quadrature
from .geometry import CUT
from .space import SgfemSpace, basis_tables

PLAIN_ORDER = 2
CUT_ORDER = 4
SEGMENT_ORDER = 3


def _barycentric_in(verts, pts):
    """Barycentric coordinates of pts (n,2) in the triangle verts (3,2)."""
    d1 = verts[1] - verts[0]
    d2 = verts[2] - verts[0]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    rel = pts - verts[0]
    xi = (rel[:, 0] * d2[1] - rel[:, 1] * d2[0]) / det
    eta = (-rel[:, 0] * d1[1] + rel[:, 1] * d1[0]) / det
    return np.column_stack([1.0 - xi - eta, xi, eta])


class Assembler:
    """Quadrature caches plus matrix/load assembly for one space."""

    def __init__(self, space: SgfemSpace, plain_order=PLAIN_ORDER,
                 cut_order=CUT_ORDER, segment_order=SEGMENT_ORDER):
        self.space = space
        self.segment_order = segment_order
        mesh = space.mesh

        enriched = space.element_is_enriched(np.arange(mesh.n_elements))
        tags = space.element_tags

        elem_ids, lam_list, w_list, side_list = [], [], [], []

        plain_rule = quadrature.element_rule(plain_order)
        rich_rule = quadrature.element_rule(cut_order)
        lam_plain = np.column_stack([1.0 - plain_rule.points.sum(axis=1),
                                     plain_rule.points])
        lam_rich = np.column_stack([1.0 - rich_rule.points.sum(axis=1),
                                    rich_rule.points])
        area = 0.5 * mesh.h * mesh.h

        for mask, lam_ref, rule in (
                ((tags != CUT) & ~enriched, lam_plain, plain_rule),
                ((tags != CUT) & enriched, lam_rich, rich_rule)):
            elems = np.flatnonzero(mask)
            if elems.size == 0:
                continue
            nq = lam_ref.shape[0]
            elem_ids.append(np.repeat(elems, nq))
            lam_list.append(np.tile(lam_ref, (elems.size, 1)))
            w_list.append(np.tile(rule.weights * 2.0 * area, elems.size))
            side_list.append(np.repeat(tags[elems].astype(np.int64), nq))

        for e in space.cut_elements:
            dec = space.decompositions[int(e)]
            verts = mesh.element_vertices(int(e))
            for tri, tri_side in zip(dec.sub_triangles, dec.sub_sides):
                pts, w = quadrature.map_to_triangle(tri, rich_rule)
                elem_ids.append(np.full(pts.shape[0], e, dtype=np.int64))
                lam_list.append(_barycentric_in(verts, pts))
                w_list.append(w)
                side_list.append(np.full(pts.shape[0], tri_side, dtype=np.int64))

        self.elem = np.concatenate(elem_ids)
        lam = np.vstack(lam_list)
        self.w = np.concatenate(w_list)
        self.side = np.concatenate(side_list)
        verts_b = mesh.nodes[mesh.elements[self.elem]]
        self.pts = np.einsum("nk,nkd->nd", lam, verts_b)

        cols, vals, grads = basis_tables(space, self.elem, lam, self.side)
        nq = self.pts.shape[0]
        rows = np.repeat(np.arange(nq), 6)
        keep = cols.ravel() >= 0
        ij = (rows[keep], cols.ravel()[keep])
        shape = (nq, space.n_dofs)
        self.B = sp.coo_matrix((vals.ravel()[keep], ij), shape=shape).tocsr()
        self.Bx = sp.coo_matrix((grads[:, :, 0].ravel()[keep], ij), shape=shape).tocsr()
        self.By = sp.coo_matrix((grads[:, :, 1].ravel()[keep], ij), shape=shape).tocsr()

        self._build_interface_cache(segment_order)

    def _build_interface_cache(self, segment_order):
        space = self.space
        rule = quadrature.segment_rule(segment_order)
        pts_list, w_list, elem_list = [], [], []
        seg_ids = []
        for k, (e, seg) in enumerate(space.segments):
            p, w = quadrature.map_to_segment(seg[0], seg[1], rule)
            pts_list.append(p)
            w_list.append(w)
            elem_list.append(np.full(p.shape[0], e, dtype=np.int64))
            seg_ids.append(np.full(p.shape[0], k, dtype=np.int64))
        if pts_list:
            self.ifc_pts = np.vstack(pts_list)
            self.ifc_w = np.concatenate(w_list)
            self.ifc_elem = np.concatenate(elem_list)
            self.ifc_seg = np.concatenate(seg_ids)
        else:
            self.ifc_pts = np.empty((0, 2))
            self.ifc_w = np.empty(0)
            self.ifc_elem = np.empty(0, dtype=np.int64)
            self.ifc_seg = np.empty(0, dtype=np.int64)

        n = self.ifc_pts.shape[0]
        if n:
            lam = np.empty((n, 3))
            for e in np.unique(self.ifc_elem):
                m = self.ifc_elem == e
                lam[m] = _barycentric_in(space.mesh.element_vertices(int(e)),
                                         self.ifc_pts[m])
            side = np.where(space.interface.values(self.ifc_pts) > 0.0, 1, -1)
            cols, vals, _ = basis_tables(space, self.ifc_elem, lam, side,
                                         need_gradients=False)
            rows = np.repeat(np.arange(n), 6)
            keep = cols.ravel() >= 0
            self.B_ifc = sp.coo_matrix(
                (vals.ravel()[keep], (rows[keep], cols.ravel()[keep])),
                shape=(n, space.n_dofs)).tocsr()
        else:
            self.B_ifc = sp.csr_matrix((0, space.n_dofs))

    # -- matrices ----------------------------------------------------------

    def mass(self) -> sp.csr_matrix:
        M = self.B.T @ sp.diags(self.w) @ self.B
        return ((M + M.T) * 0.5).tocsr()

    def stiffness(self, beta_minus: float, beta_plus: float) -> sp.csr_matrix:
        if beta_minus <= 0 or beta_plus <= 0:
            raise ValueError("conductivities must be positive")
        beta = np.where(self.side > 0, beta_plus, beta_minus)
        D = sp.diags(self.w * beta)
        A = self.Bx.T @ D @ self.Bx + self.By.T @ D @ self.By
        return ((A + A.T) * 0.5).tocsr()

    # -- loads -------------------------------------------------------------

    def volume_load_at(self, f, t: float) -> np.ndarray:
        """Load vector of (f(.,t), basis) over the volume quadrature."""
        vals = f(self.pts, t, self.side)
        return self.B.T @ (self.w * vals)

    def volume_load(self, f, grid, n: int) -> np.ndarray:
        """Interval average of the volume load over time Gauss nodes."""
        times, tw = grid.gauss(n)
        acc = np.zeros(self.space.n_dofs)
        for t, wt in zip(times, tw):
            acc += wt * self.volume_load_at(f, t)
        return acc / grid.dt

    def interface_load_values(self, gamma_vals) -> np.ndarray:
        """Load vector of <gamma, basis> for values on the interface points."""
        return self.B_ifc.T @ (self.ifc_w * gamma_vals)

    def interface_load(self, gamma, grid, n: int) -> np.ndarray:
        """Interval average of <gamma(.,t), basis> over time Gauss nodes."""
        times, tw = grid.gauss(n)
        acc = np.zeros(self.space.n_dofs)
        for t, wt in zip(times, tw):
            acc += wt * self.interface_load_values(gamma(self.ifc_pts, t))
        return acc / grid.dt

    def interface_trace(self, coeffs) -> np.ndarray:
        """Values of a discrete field at the interface quadrature points."""
        return self.B_ifc @ coeffs

    def l2_norm(self, coeffs) -> float:
        vals = self.B @ coeffs
        return float(np.sqrt(np.sum(self.w * vals * vals)))


@dataclass
class ConstrainedSystem:
    """Symmetric elimination of Dirichlet dofs with a reusable factorization."""

    matrix: sp.csr_matrix
    free: np.ndarray
    constrained: np.ndarray

    def __post_init__(self):
        K = self.matrix.tocsr()
        self.K_ff = K[self.free][:, self.free].tocsc()
        self.K_fc = K[self.free][:, self.constrained].tocsr()
        self.lu = linalg.factorized(self.K_ff)

    def solve(self, rhs, constrained_values) -> np.ndarray:
        """Solve with the given values pinned on the constrained dofs."""
        x = np.empty(self.matrix.shape[0])
        x[self.constrained] = constrained_values
        b = rhs[self.free] - self.K_fc @ constrained_values
        x[self.free] = linalg.linear_solve(self.K_ff, b, lu=self.lu)
        return x


def get_assembler(space: SgfemSpace) -> Assembler:
    """Assembler for the space, built once and cached on the instance."""
    asm = getattr(space, "_assembler", None)
    if asm is None:
        asm = Assembler(space)
        space._assembler = asm
    return asm


def assemble_mass(space: SgfemSpace) -> sp.csr_matrix:
    return get_assembler(space).mass()


def assemble_stiffness(space: SgfemSpace, beta_minus: float,
                       beta_plus: float) -> sp.csr_matrix:
    return get_assembler(space).stiffness(beta_minus, beta_plus)


def assemble_volume_load(space: SgfemSpace, f, grid, n: int) -> np.ndarray:
    return get_assembler(space).volume_load(f, grid, n)


def assemble_interface_load(space: SgfemSpace, gamma, grid, n: int) -> np.ndarray:
    return get_assembler(space).interface_load(gamma, grid, n)


def conditioning_estimate(space: SgfemSpace, beta=(1.0, 1.0), iters: int = 80,
                          seed: int = 0) -> float:
    """Condition number of the diagonally scaled constrained stiffness.

    Power iteration for the largest eigenvalue and inverse iteration for
    the smallest, both with a fixed seed; a cheap diagnostic, not a
    rigorous bound.
    """
    asm = get_assembler(space)
    A = asm.stiffness(*beta)
    free = space.free_dofs
    Aff = A[free][:, free].tocsr()
    scale = 1.0 / np.sqrt(Aff.diagonal())
    As = (sp.diags(scale) @ Aff @ sp.diags(scale)).tocsc()

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(As.shape[0])
    lam_max = 0.0
    for _ in range(iters):
        x = As @ x
        lam_max = float(np.linalg.norm(x))
        x /= lam_max

    lu = linalg.factorized(As)
    y = rng.standard_normal(As.shape[0])
    mu = 0.0
    for _ in range(iters):
        y = lu.solve(y)
        mu = float(np.linalg.norm(y))
        y /= mu
    lam_min = 1.0 / mu
    return lam_max / lam_min


def elliptic_projection(space: SgfemSpace, grad_w, trace_w=None,
                        beta=(1.0, 1.0), stiffness=None,
                        system: ConstrainedSystem = None) -> np.ndarray:
    """Energy-orthogonal projection of a field onto the discrete space.

    ``grad_w(pts, side)`` supplies the (possibly one-sided) gradient, and
    ``trace_w(pts)`` the boundary values pinned on the constrained
    standard dofs (enrichment pins to zero).  A prebuilt stiffness or
    constrained system can be passed to reuse factorizations.
    """
    asm = get_assembler(space)
    if system is None:
        A = stiffness if stiffness is not None else asm.stiffness(*beta)
        system = ConstrainedSystem(A, space.free_dofs, space.constrained_dofs)

    beta_q = np.where(asm.side > 0, beta[1], beta[0])
    g = grad_w(asm.pts, asm.side)
    rhs = asm.Bx.T @ (asm.w * beta_q * g[:, 0]) + asm.By.T @ (asm.w * beta_q * g[:, 1])

    con = space.constrained_dofs
    values = np.zeros(con.size)
    if trace_w is not None:
        std = con < space.n_std
        values[std] = trace_w(space.mesh.nodes[con[std]])
    return system.solve(rhs, values)
