"""Level-set interface geometry.

The interface is a zero level set splitting the square into an inner
region (phi < 0) and an outer one (phi > 0).  This module classifies
mesh elements against the curve, splits cut triangles into one-sided
sub-triangles plus straight interface segments, and evaluates the
one-sided distance used as enrichment near the curve.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateCut, NonConvergence

INSIDE_MINUS = -1
INSIDE_PLUS = 1
CUT = 0

# vertices closer to the curve than VERTEX_TIE_FACTOR*h count as inner side
VERTEX_TIE_FACTOR = 1e-12
_EDGE_SAMPLES = 17
_MAX_QUAD_DEPTH = 4


@dataclass
class LevelSetInterface:
    """Scalar field phi with gradient; phi<0 inside, phi>0 outside."""

    kind: str
    phi: Callable[[np.ndarray], np.ndarray]
    grad_phi: Callable[[np.ndarray], np.ndarray]
    params: tuple = ()
    hess_phi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    analytic_distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    analytic_closest_dir: Optional[Callable[[np.ndarray], np.ndarray]] = None
    seed_polyline: Optional[np.ndarray] = None
    newton_fallbacks: int = field(default=0, compare=False)
    _seed_tree: Optional[cKDTree] = field(default=None, repr=False, compare=False)

    def values(self, pts) -> np.ndarray:
        return self.phi(np.atleast_2d(np.asarray(pts, float)))

    def gradients(self, pts) -> np.ndarray:
        return self.grad_phi(np.atleast_2d(np.asarray(pts, float)))

    def normals(self, pts) -> np.ndarray:
        g = self.gradients(pts)
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def signs(self, pts, h: float) -> np.ndarray:
        """Tie-ruled side per point: -1 unless phi exceeds the vertex tolerance."""
        v = self.values(pts)
        return np.where(v >= VERTEX_TIE_FACTOR * h, 1, -1).astype(np.int8)

    def _tree(self) -> cKDTree:
        if self._seed_tree is None:
            if self.seed_polyline is None:
                raise NonConvergence(f"no closest-point seeds for interface {self.kind!r}")
            object.__setattr__(self, "_seed_tree", cKDTree(self.seed_polyline))
        return self._seed_tree


def circle_interface(r0: float = 0.5) -> LevelSetInterface:
    def phi(p):
        return p[:, 0] ** 2 + p[:, 1] ** 2 - r0 ** 2

    def grad(p):
        return 2.0 * p

    def hess(p):
        h = np.zeros((p.shape[0], 2, 2))
        h[:, 0, 0] = 2.0
        h[:, 1, 1] = 2.0
        return h

    def dist(p):
        return np.abs(np.hypot(p[:, 0], p[:, 1]) - r0)

    def closest_dir(p):
        r = np.hypot(p[:, 0], p[:, 1])
        d = p / np.where(r == 0.0, 1.0, r)[:, None]
        return d * np.sign(r - r0)[:, None]

    return LevelSetInterface(kind="circle", params=(r0,), phi=phi, grad_phi=grad,
                             hess_phi=hess, analytic_distance=dist,
                             analytic_closest_dir=closest_dir)


def _cubic_height(x1):
    return 3.0 * x1 * (x1 - 0.3) * (x1 - 0.8) + 0.38


def cubic_interface() -> LevelSetInterface:
    """Cubic graph x2 = 3 x1 (x1-0.3)(x1-0.8) + 0.38; below the graph is inside."""

    def phi(p):
        return p[:, 1] - _cubic_height(p[:, 0])

    def grad(p):
        x1 = p[:, 0]
        gx = -(9.0 * x1 ** 2 - 6.6 * x1 + 0.72)
        return np.column_stack([gx, np.ones_like(x1)])

    def hess(p):
        h = np.zeros((p.shape[0], 2, 2))
        h[:, 0, 0] = -(18.0 * p[:, 0] - 6.6)
        return h

    # sample the graph a little past the square so near-boundary points
    # project onto the true curve, not a clipped endpoint
    xs = np.linspace(-1.2, 1.2, 4801)
    seeds = np.column_stack([xs, _cubic_height(xs)])
    seeds = seeds[np.abs(seeds[:, 1]) <= 1.6]
    return LevelSetInterface(kind="cubic", phi=phi, grad_phi=grad, hess_phi=hess,
                             seed_polyline=seeds)


def flower_interface() -> LevelSetInterface:
    """Six-petal curve r^4 (1 + 0.4 sin 6t) = 0.3 with the origin inside."""

    def _parts(p):
        x, y = p[:, 0], p[:, 1]
        s = x * x + y * y
        z = x + 1j * y
        w = np.imag(z ** 6)          # r^6 sin 6t
        return x, y, s, z, w

    def phi(p):
        x, y, s, z, w = _parts(p)
        out = np.empty_like(s)
        origin = s == 0.0
        safe = ~origin
        out[safe] = s[safe] ** 2 + 0.4 * w[safe] / s[safe] - 0.3
        out[origin] = -0.3
        return out

    def grad(p):
        x, y, s, z, w = _parts(p)
        g = np.zeros_like(p)
        safe = s > 0.0
        xs, ys, ss = x[safe], y[safe], s[safe]
        dz = 6.0 * z[safe] ** 5     # holomorphic derivative of z^6
        wx, wy = np.imag(dz), np.real(dz)
        g[safe, 0] = 4.0 * ss * xs + 0.4 * (wx / ss - 2.0 * xs * w[safe] / ss ** 2)
        g[safe, 1] = 4.0 * ss * ys + 0.4 * (wy / ss - 2.0 * ys * w[safe] / ss ** 2)
        return g

    def hess(p):
        x, y, s, z, w = _parts(p)
        H = np.zeros((p.shape[0], 2, 2))
        safe = s > 0.0
        xs, ys, ss, ws = x[safe], y[safe], s[safe], w[safe]
        dz = 6.0 * z[safe] ** 5
        d2z = 30.0 * z[safe] ** 4
        wx, wy = np.imag(dz), np.real(dz)
        wxx, wxy = np.imag(d2z), np.real(d2z)
        wyy = -wxx
        inv = 1.0 / ss
        inv2 = inv * inv
        inv3 = inv2 * inv
        # r^4 part
        H[safe, 0, 0] = 8.0 * xs * xs + 4.0 * ss
        H[safe, 0, 1] = 8.0 * xs * ys
        H[safe, 1, 1] = 8.0 * ys * ys + 4.0 * ss
        # w/s part via product rule on w * s^{-1}
        H[safe, 0, 0] += 0.4 * (wxx * inv - 4.0 * xs * wx * inv2
                                + ws * (8.0 * xs * xs * inv3 - 2.0 * inv2))
        H[safe, 0, 1] += 0.4 * (wxy * inv - 2.0 * (xs * wy + ys * wx) * inv2
                                + 8.0 * xs * ys * ws * inv3)
        H[safe, 1, 1] += 0.4 * (wyy * inv - 4.0 * ys * wy * inv2
                                + ws * (8.0 * ys * ys * inv3 - 2.0 * inv2))
        H[:, 1, 0] = H[:, 0, 1]
        return H

    theta = np.linspace(0.0, 2.0 * np.pi, 8001)
    radius = (0.3 / (1.0 + 0.4 * np.sin(6.0 * theta))) ** 0.25
    seeds = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    return LevelSetInterface(kind="flower", phi=phi, grad_phi=grad, hess_phi=hess,
                             seed_polyline=seeds)


def make_interface(kind: str, r0: float = 0.5) -> LevelSetInterface:
    if kind == "circle":
        return circle_interface(r0)
    if kind == "cubic":
        return cubic_interface()
    if kind == "flower":
        return flower_interface()
    raise ValueError(f"unknown interface kind {kind!r}")


# ---------------------------------------------------------------------------
# closest-point projection / one-sided distance
# ---------------------------------------------------------------------------

def closest_point(interface: LevelSetInterface, pts, max_iter: int = 50,
                  tol: float = 1e-12):
    """Foot points on the curve for a batch of query points.

    Newton iteration on (phi(p)=0, (x-p) parallel to grad phi(p)), seeded
    at the nearest point of a fine polyline of the curve.  Points where
    Newton stalls fall back to the first-order estimate x - phi*g/|g|^2
    and are counted in ``interface.newton_fallbacks``.
    """
    x = np.atleast_2d(np.asarray(pts, float))
    if interface.analytic_closest_dir is not None:
        d = interface.analytic_distance(x)
        return x - d[:, None] * interface.analytic_closest_dir(x)
    if interface.hess_phi is None:
        raise NonConvergence("closest-point Newton needs a level-set Hessian")

    tree = interface._tree()
    _, idx = tree.query(x)
    p = interface.seed_polyline[idx].copy()
    active = np.ones(x.shape[0], dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        pa, xa = p[active], x[active]
        g = interface.gradients(pa)
        H = interface.hess_phi(pa)
        f1 = interface.values(pa)
        rx = xa - pa
        f2 = rx[:, 0] * g[:, 1] - rx[:, 1] * g[:, 0]
        j11, j12 = g[:, 0], g[:, 1]
        j21 = -g[:, 1] + rx[:, 0] * H[:, 0, 1] - rx[:, 1] * H[:, 0, 0]
        j22 = g[:, 0] + rx[:, 0] * H[:, 1, 1] - rx[:, 1] * H[:, 0, 1]
        det = j11 * j22 - j12 * j21
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        dp0 = -(j22 * f1 - j12 * f2) / det
        dp1 = -(-j21 * f1 + j11 * f2) / det
        p[active, 0] += dp0
        p[active, 1] += dp1
        moved = np.hypot(dp0, dp1) > tol
        still = active.copy()
        still[active] = moved
        active = still

    stalled = np.abs(interface.values(p)) > 1e-9
    if stalled.any():
        interface.newton_fallbacks += int(stalled.sum())
        xa = x[stalled]
        g = interface.gradients(xa)
        g2 = np.sum(g * g, axis=1)
        if np.any(g2 == 0.0):
            raise NonConvergence("degenerate level set gradient at query point")
        p[stalled] = xa - (interface.values(xa) / g2)[:, None] * g
    return p


def unsigned_distance(interface: LevelSetInterface, pts) -> np.ndarray:
    """Plain distance to the curve for a batch of points."""
    x = np.atleast_2d(np.asarray(pts, float))
    if interface.analytic_distance is not None:
        return interface.analytic_distance(x)
    foot = closest_point(interface, x)
    return np.hypot(*(x - foot).T)


def one_sided_distance(interface: LevelSetInterface, pts):
    """Distance to the curve on the outer side, zero on and inside it."""
    x = np.atleast_2d(np.asarray(pts, float))
    out = np.zeros(x.shape[0])
    pos = interface.values(x) > 0.0
    if pos.any():
        out[pos] = unsigned_distance(interface, x[pos])
    if np.asarray(pts, float).ndim == 1:
        return float(out[0])
    return out


def distance_gradient(interface: LevelSetInterface, pts):
    """Unit direction away from the curve for outer-side points."""
    x = np.atleast_2d(np.asarray(pts, float))
    if interface.analytic_closest_dir is not None:
        return interface.analytic_closest_dir(x)
    foot = closest_point(interface, x)
    d = x - foot
    norm = np.hypot(d[:, 0], d[:, 1])
    tiny = norm <= 1e-13
    if tiny.any():
        # on the curve: fall back to the level-set normal
        d[tiny] = interface.normals(x[tiny])
        norm[tiny] = 1.0
    return d / norm[:, None]


# ---------------------------------------------------------------------------
# element classification
# ---------------------------------------------------------------------------

def classify_element(interface: LevelSetInterface, element_vertices, h=None):
    """Tag a single triangle: CUT, INSIDE_MINUS or INSIDE_PLUS."""
    v = np.asarray(element_vertices, float)
    if h is None:
        h = max(np.hypot(*(v[1] - v[0])), np.hypot(*(v[2] - v[1])),
                np.hypot(*(v[0] - v[2])))
    signs = interface.signs(v, h)
    if signs.min() != signs.max():
        return CUT
    if _edges_crossed(interface, v, h):
        return CUT
    return int(signs[0])


def classify_all(interface: LevelSetInterface, mesh):
    """Vectorized classification of every mesh element."""
    node_signs = interface.signs(mesh.nodes, mesh.h)
    elem_signs = node_signs[mesh.elements]
    tags = np.where(np.all(elem_signs == 1, axis=1), INSIDE_PLUS,
                    np.where(np.all(elem_signs == -1, axis=1), INSIDE_MINUS, CUT))
    uniform = np.flatnonzero(tags != CUT)
    if uniform.size:
        hits = _edges_crossed_bulk(interface, mesh.element_vertices(uniform), mesh.h)
        tags[uniform[hits]] = CUT
    return tags.astype(np.int8)


def _edges_crossed(interface, verts, h) -> bool:
    return bool(_edges_crossed_bulk(interface, verts[None, :, :], h)[0])


def _edges_crossed_bulk(interface, verts, h):
    """Detect a sign change of phi along any edge by dense sampling."""
    t = np.linspace(0.0, 1.0, _EDGE_SAMPLES)
    n = verts.shape[0]
    hit = np.zeros(n, dtype=bool)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        seg = verts[:, a, None, :] + t[None, :, None] * (verts[:, b] - verts[:, a])[:, None, :]
        vals = interface.values(seg.reshape(-1, 2)).reshape(n, _EDGE_SAMPLES)
        signs = np.where(vals >= VERTEX_TIE_FACTOR * h, 1, -1)
        hit |= np.any(signs[:, 1:] != signs[:, :-1], axis=1)
    return hit


# ---------------------------------------------------------------------------
# cut decomposition
# ---------------------------------------------------------------------------

@dataclass
class CutDecomposition:
    """Exact sub-triangulation of a cut element plus interface chords."""

    sub_triangles: list     # list of (3,2) arrays
    sub_sides: list         # matching side tag per sub-triangle (-1/+1)
    interface_segments: list  # list of (2,2) arrays [p0; p1]

    def areas(self) -> np.ndarray:
        out = np.empty(len(self.sub_triangles))
        for k, tri in enumerate(self.sub_triangles):
            d1 = tri[1] - tri[0]
            d2 = tri[2] - tri[0]
            out[k] = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        return out


def _edge_roots(interface, p0, p1, v0, v1, tie_tol):
    """Roots of phi along the edge p0-p1, as parameters in (0,1).

    Endpoint zeros are reported separately by the caller through the
    vertex tie rule, so only strict sign changes between samples count.
    """
    t = np.linspace(0.0, 1.0, _EDGE_SAMPLES)
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    vals = interface.values(pts)
    vals[0], vals[-1] = v0, v1
    signs = np.where(vals >= tie_tol, 1, -1)
    roots = []
    for k in range(_EDGE_SAMPLES - 1):
        if signs[k] == signs[k + 1]:
            continue
        a, b = t[k], t[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if fa * fb >= 0.0:
            # bracket exists only through the vertex tie rule; snap to the
            # endpoint nearest the curve
            roots.append(a if abs(fa) <= abs(fb) else b)
            continue
        for _ in range(70):
            m = 0.5 * (a + b)
            if m == a or m == b:
                break
            fm = float(interface.values(p0 + m * (p1 - p0))[0])
            if (fm >= 0.0) == (fa >= 0.0):
                a, fa = m, fm
            else:
                b, fb = m, fm
        roots.append(a if abs(fa) <= abs(fb) else b)
    return roots


def _split_by_chord(interface, verts, signs, cut_points):
    """Split the triangle boundary at two cut points and fan-triangulate.

    ``cut_points`` holds ("vertex", i, point) or ("edge", e, t, point)
    records.  Returns (sub_triangles, sub_sides, segment) or None when
    the polygon walk cannot assign consistent sides.
    """
    entries = []  # (point, is_root, vertex_sign_or_None)
    for i in range(3):
        vertex_root = next((cp for cp in cut_points
                            if cp[0] == "vertex" and cp[1] == i), None)
        if vertex_root is not None:
            entries.append((verts[i], True, None))
        else:
            entries.append((verts[i], False, signs[i]))
        edge_hits = sorted((cp for cp in cut_points
                            if cp[0] == "edge" and cp[1] == i),
                           key=lambda cp: cp[2])
        for cp in edge_hits:
            entries.append((cp[3], True, None))

    root_pos = [k for k, e in enumerate(entries) if e[1]]
    if len(root_pos) != 2:
        return None
    r1, r2 = root_pos
    n = len(entries)
    arc1 = [entries[k] for k in range(r1 + 1, r2)]
    arc2 = [entries[k % n] for k in range(r2 + 1, r1 + n)]

    segment = np.array([entries[r1][0], entries[r2][0]])
    subs, sides = [], []
    for arc, first, last in ((arc1, entries[r1], entries[r2]),
                             (arc2, entries[r2], entries[r1])):
        arc_signs = {e[2] for e in arc if e[2] is not None}
        if len(arc_signs) > 1:
            return None
        poly = [first[0]] + [e[0] for e in arc] + [last[0]]
        if len(poly) < 3:
            continue
        side = arc_signs.pop() if arc_signs else None
        if side is None:
            centroid = np.mean(np.asarray(poly), axis=0)
            side = 1 if float(interface.values(centroid[None, :])[0]) > 0 else -1
        for k in range(1, len(poly) - 1):
            tri = np.array([poly[0], poly[k], poly[k + 1]])
            d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
            if abs(d1[0] * d2[1] - d1[1] * d2[0]) < 1e-30:
                continue
            subs.append(tri)
            sides.append(side)
    return subs, sides, segment


def _decompose_recursive(interface, verts, h, depth):
    tie_tol = VERTEX_TIE_FACTOR * h
    vals = interface.values(verts)
    signs = np.where(vals >= tie_tol, 1, -1)

    cut_points = []
    for i in range(3):
        if abs(vals[i]) < tie_tol:
            cut_points.append(("vertex", i, verts[i]))
    vertex_pts = [cp[2] for cp in cut_points]
    edges = ((0, 1), (1, 2), (2, 0))
    for e, (a, b) in enumerate(edges):
        for t in _edge_roots(interface, verts[a], verts[b], vals[a], vals[b], tie_tol):
            pt = verts[a] + t * (verts[b] - verts[a])
            # an edge root sitting on a tied vertex is the same cut point
            if any(np.hypot(*(pt - q)) < 1e-9 * h for q in vertex_pts):
                continue
            cut_points.append(("edge", e, t, pt))

    if not any(cp[0] == "edge" for cp in cut_points) and signs.min() == signs.max():
        return [verts.copy()], [int(signs[0])], []

    if len(cut_points) == 2:
        split = _split_by_chord(interface, verts, signs, cut_points)
        if split is not None:
            subs, sides, segment = split
            return subs, sides, [segment]

    if depth < _MAX_QUAD_DEPTH:
        m01 = 0.5 * (verts[0] + verts[1])
        m12 = 0.5 * (verts[1] + verts[2])
        m20 = 0.5 * (verts[2] + verts[0])
        children = (np.array([verts[0], m01, m20]), np.array([m01, verts[1], m12]),
                    np.array([m20, m12, verts[2]]), np.array([m01, m12, m20]))
        subs, sides, segs = [], [], []
        for child in children:
            s, sd, sg = _decompose_recursive(interface, child, 0.5 * h, depth + 1)
            subs += s
            sides += sd
            segs += sg
        return subs, sides, segs

    # depth exhausted: linear clip using the tie-ruled vertex signs
    keep = [i for i in range(3) if signs[i] > 0]
    drop = [i for i in range(3) if signs[i] < 0]
    if not keep or not drop:
        centroid = verts.mean(axis=0)
        side = 1 if float(interface.values(centroid[None, :])[0]) > 0 else -1
        return [verts.copy()], [side], []

    def lerp(i, j):
        fi, fj = vals[i], vals[j]
        t = fi / (fi - fj) if fi != fj else 0.5
        return verts[i] + min(max(t, 0.0), 1.0) * (verts[j] - verts[i])

    if len(keep) == 1:
        k = keep[0]
        i1, i2 = lerp(k, drop[0]), lerp(k, drop[1])
        subs = [np.array([verts[k], i1, i2]),
                np.array([i1, verts[drop[0]], verts[drop[1]]]),
                np.array([i1, verts[drop[1]], i2])]
        sides = [1, -1, -1]
    else:
        d = drop[0]
        i1, i2 = lerp(keep[0], d), lerp(keep[1], d)
        subs = [np.array([verts[d], i1, i2]),
                np.array([i1, verts[keep[0]], verts[keep[1]]]),
                np.array([i1, verts[keep[1]], i2])]
        sides = [-1, 1, 1]
    return subs, sides, [np.array([i1, i2])]


def decompose_cut_element(interface: LevelSetInterface, element_vertices,
                          h=None) -> CutDecomposition:
    """Partition a cut triangle into one-sided sub-triangles and chords."""
    verts = np.asarray(element_vertices, float)
    if h is None:
        h = max(np.hypot(*(verts[1] - verts[0])), np.hypot(*(verts[2] - verts[1])),
                np.hypot(*(verts[0] - verts[2])))
    subs, sides, segs = _decompose_recursive(interface, verts, h, 0)
    if not segs:
        raise DegenerateCut("no interface chord recovered inside a cut element")
    parent = 0.5 * abs((verts[1] - verts[0])[0] * (verts[2] - verts[0])[1]
                       - (verts[1] - verts[0])[1] * (verts[2] - verts[0])[0])
    dec = CutDecomposition(subs, sides, segs)
    total = dec.areas().sum()
    if abs(total - parent) > 1e-12 * parent:
        raise DegenerateCut(f"sub-triangle areas {total} do not match parent {parent}")
    return dec


class PolylineDistance:
    """Distance and foot point against a set of straight segments.

    Queries shortlist candidate segments through a KD-tree over sampled
    segment points, then take the exact point-segment minimum.
    """

    def __init__(self, segments):
        seg = np.asarray(segments, float)          # (m, 2, 2)
        self.a = seg[:, 0]
        self.d = seg[:, 1] - seg[:, 0]
        self.len2 = np.maximum(np.sum(self.d * self.d, axis=1), 1e-300)
        samples = np.concatenate([seg[:, 0], seg[:, 1],
                                  0.5 * (seg[:, 0] + seg[:, 1])])
        self.sample_seg = np.tile(np.arange(seg.shape[0]), 3)
        self.tree = cKDTree(samples)
        self.k = min(12, samples.shape[0])

    def query(self, pts):
        """Returns (distance, foot point) per query point."""
        x = np.atleast_2d(np.asarray(pts, float))
        _, idx = self.tree.query(x, k=self.k)
        idx = np.atleast_2d(idx)
        cand = self.sample_seg[idx]                # (n, k)
        a = self.a[cand]                           # (n, k, 2)
        d = self.d[cand]
        rel = x[:, None, :] - a
        t = np.clip(np.einsum("nkd,nkd->nk", rel, d) / self.len2[cand], 0.0, 1.0)
        proj = a + t[..., None] * d
        dist2 = np.sum((x[:, None, :] - proj) ** 2, axis=2)
        best = np.argmin(dist2, axis=1)
        rows = np.arange(x.shape[0])
        return np.sqrt(dist2[rows, best]), proj[rows, best]


def curve_parameter(interface: LevelSetInterface, pts) -> np.ndarray:
    """Monotone parameter along the curve, for ordering plot samples."""
    p = np.atleast_2d(np.asarray(pts, float))
    if interface.kind == "cubic":
        return p[:, 0].copy()
    return np.arctan2(p[:, 1], p[:, 0])


def clip_segments_to_box(segments, lo=-1.0, hi=1.0):
    """Clip interface chords to the closed square [lo,hi]^2."""
    out = []
    for seg in segments:
        p0, p1 = np.asarray(seg, float)
        t0, t1 = 0.0, 1.0
        d = p1 - p0
        ok = True
        for dim in range(2):
            if d[dim] == 0.0:
                if p0[dim] < lo or p0[dim] > hi:
                    ok = False
                    break
                continue
            ta = (lo - p0[dim]) / d[dim]
            tb = (hi - p0[dim]) / d[dim]
            ta, tb = min(ta, tb), max(ta, tb)
            t0, t1 = max(t0, ta), min(t1, tb)
        if ok and t1 > t0:
            out.append(np.array([p0 + t0 * d, p0 + t1 * d]))
    return out
