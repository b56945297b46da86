"""Discrete hypersurface representations and their geometric estimators.

Three representations share one set of operations:

* ``TriMesh``: a triangulated surface in R^3 (n = 2).
* ``AxisymProfile``: a surface of revolution about the x-axis, given as a
  radius function u(x) on a grid.
* ``ExactSurface``: an instantaneous slice of a closed-form flow (round
  sphere, round cylinder, hyperplane) evaluated analytically or on a
  high-order quadrature.

Sign conventions: ``nu`` is the outward unit normal and ``H`` is the sum of
principal curvatures, so a round sphere of radius r has H = n/r and the flow
velocity ``-H nu`` points inward.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

DEGENERACY_RATIO = 1e-12


class MeshError(ValueError):
    """Structural problem with a mesh (non-manifold, isolated vertex...)."""


class DegenerateMeshError(MeshError):
    """A face collapsed below the degeneracy threshold."""


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------


@dataclass
class TriMesh:
    vertices: np.ndarray
    faces: np.ndarray
    time: float = 0.0
    closed: bool = True

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        self.validate()

    def validate(self) -> None:
        V, F = self.vertices, self.faces
        if V.ndim != 2 or V.shape[1] != 3:
            raise MeshError(f"vertices must have shape (N, 3), got {V.shape}")
        if F.ndim != 2 or F.shape[1] != 3:
            raise MeshError(f"faces must be triangles, got shape {F.shape}")
        if len(V) < 4:
            raise MeshError(f"need at least 4 vertices, got {len(V)}")
        if not np.isfinite(self.time):
            raise MeshError("time must be finite")
        if F.min() < 0 or F.max() >= len(V):
            raise MeshError("face index out of range")
        used = np.zeros(len(V), dtype=bool)
        used[F.ravel()] = True
        if not used.all():
            raise MeshError(f"isolated vertex {int(np.flatnonzero(~used)[0])}")
        # directed half-edges must be unique; undirected edges shared by <= 2 faces
        he = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        nv = len(V)
        keys = he[:, 0] * nv + he[:, 1]
        uniq, counts = np.unique(keys, return_counts=True)
        if (counts > 1).any():
            k = uniq[counts > 1][0]
            raise MeshError(
                f"non-manifold or inconsistently oriented edge ({k // nv}, {k % nv})"
            )
        twin = he[:, 1] * nv + he[:, 0]
        has_twin = np.isin(twin, uniq)
        if self.closed and not has_twin.all():
            e = he[~has_twin][0]
            raise MeshError(f"open edge ({e[0]}, {e[1]}) in a mesh declared closed")
        areas = face_areas(self)
        if (areas <= DEGENERACY_RATIO * areas.mean()).any():
            raise DegenerateMeshError(
                f"degenerate face {int(np.argmin(areas))} (area {areas.min():.3e})"
            )

    def with_vertices(self, vertices: np.ndarray, time: float) -> "TriMesh":
        return TriMesh(vertices, self.faces, time, self.closed)

    def boundary_vertices(self) -> np.ndarray:
        F = self.faces
        nv = len(self.vertices)
        he = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        keys = set((he[:, 0] * nv + he[:, 1]).tolist())
        open_he = [e for e in he if (e[1] * nv + e[0]) not in keys]
        if not open_he:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.asarray(open_he).ravel())


@dataclass
class AxisymProfile:
    """Surface of revolution {(x, u(x) cos phi, u(x) sin phi)}.

    For ``boundary="periodic"`` the last grid node is identified with the
    first (``radii[-1]`` is ignored and the period is ``grid[-1] - grid[0]``).
    ``"reflecting"`` mirrors the profile across both end nodes.
    """

    grid: np.ndarray
    radii: np.ndarray
    boundary: str = "reflecting"
    time: float = 0.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        if self.boundary not in ("periodic", "reflecting"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.grid.shape != self.radii.shape or self.grid.ndim != 1:
            raise ValueError("grid and radii must be 1-D arrays of equal length")
        if len(self.grid) < 3:
            raise ValueError("profile needs at least 3 nodes")
        h = np.diff(self.grid)
        if (h <= 0).any():
            raise ValueError("grid must be strictly increasing")
        if h.max() / h.min() > 1e3:
            raise ValueError("grid spacing ratio exceeds 1e3")
        if (self.radii[self.active] <= 0).any():
            raise ValueError("radii must be positive")
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")

    @property
    def active(self) -> slice:
        return slice(0, len(self.grid) - 1) if self.boundary == "periodic" else slice(None)

    @property
    def period(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    def with_radii(self, radii: np.ndarray, time: float) -> "AxisymProfile":
        radii = np.asarray(radii, dtype=float).copy()
        if self.boundary == "periodic":
            radii[-1] = radii[0]
        return AxisymProfile(self.grid, radii, self.boundary, time)


@dataclass
class ExactSurface:
    """Instantaneous slice of a closed-form flow.

    ``kind`` is one of ``sphere`` (centre, radius), ``cylinder`` (point on the
    axis, unit axis direction, radius, truncation ``half_length``) or ``plane``
    (base point, unit normal; ``half_length`` is the radius of the disc used
    for quadrature of generic integrands).
    """

    kind: str
    center: np.ndarray
    radius: float
    n: int
    time: float = 0.0
    direction: np.ndarray | None = None
    half_length: float = np.inf
    solution: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            self.direction = d / np.linalg.norm(d)
        if self.kind not in ("sphere", "cylinder", "plane"):
            raise ValueError(f"unknown exact surface kind {self.kind!r}")
        if self.kind != "plane" and not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.kind == "cylinder" and self.n != 2:
            raise ValueError("cylinders are only supported in R^3")
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")

    @property
    def H(self) -> float:
        if self.kind == "sphere":
            return self.n / self.radius
        if self.kind == "cylinder":
            return 1.0 / self.radius
        return 0.0

    @property
    def A2(self) -> float:
        if self.kind == "sphere":
            return self.n / self.radius**2
        if self.kind == "cylinder":
            return 1.0 / self.radius**2
        return 0.0


SurfaceState = Union[TriMesh, AxisymProfile, ExactSurface]


def dimension(state: SurfaceState) -> int:
    return state.n if isinstance(state, ExactSurface) else 2


# ---------------------------------------------------------------------------
# mesh primitives
# ---------------------------------------------------------------------------


def face_areas(mesh: TriMesh) -> np.ndarray:
    v = mesh.vertices[mesh.faces]
    return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)


def _corner_angles(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Interior angle and its cotangent at each face corner, shape (F, 3)."""
    v = mesh.vertices[mesh.faces]
    angles = np.empty(mesh.faces.shape)
    cots = np.empty(mesh.faces.shape)
    for c in range(3):
        a = v[:, (c + 1) % 3] - v[:, c]
        b = v[:, (c + 2) % 3] - v[:, c]
        dot = np.einsum("ij,ij->i", a, b)
        cr = np.linalg.norm(np.cross(a, b), axis=1)
        angles[:, c] = np.arctan2(cr, dot)
        cots[:, c] = dot / cr
    return angles, cots


def cotan_stiffness(mesh: TriMesh) -> sp.csr_matrix:
    """Positive semidefinite cotangent stiffness W with (W f)_i = sum_j w_ij (f_i - f_j)."""
    F = mesh.faces
    _, cots = _corner_angles(mesh)
    rows, cols, vals = [], [], []
    for c in range(3):
        j, k = F[:, (c + 1) % 3], F[:, (c + 2) % 3]
        w = 0.5 * cots[:, c]
        rows += [j, k, j, k]
        cols += [k, j, j, k]
        vals += [-w, -w, w, w]
    nv = len(mesh.vertices)
    W = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nv, nv)
    )
    return W.tocsr()


def mixed_areas(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex areas: Voronoi share for acute faces, thirds for obtuse ones.

    Returns ``(areas, used_barycentric)`` where the boolean mask marks vertices
    touching at least one obtuse face.
    """
    F = mesh.faces
    v = mesh.vertices[F]
    angles, cots = _corner_angles(mesh)
    fa = face_areas(mesh)
    obtuse = (angles > np.pi / 2).any(axis=1)
    contrib = np.empty(F.shape)
    for c in range(3):
        # edge from corner c to c+1 is opposite corner c+2, and so on
        e_next = np.sum((v[:, (c + 1) % 3] - v[:, c]) ** 2, axis=1)
        e_prev = np.sum((v[:, (c + 2) % 3] - v[:, c]) ** 2, axis=1)
        contrib[:, c] = (e_next * cots[:, (c + 2) % 3] + e_prev * cots[:, (c + 1) % 3]) / 8.0
    contrib[obtuse] = (fa[obtuse] / 3.0)[:, None]
    nv = len(mesh.vertices)
    areas = np.bincount(F.ravel(), weights=contrib.ravel(), minlength=nv)
    used = np.zeros(nv, dtype=bool)
    used[F[obtuse].ravel()] = True
    return areas, used


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    v = mesh.vertices[mesh.faces]
    fn = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])  # length = 2 * area
    nv = len(mesh.vertices)
    N = np.zeros((nv, 3))
    for c in range(3):
        np.add.at(N, mesh.faces[:, c], fn)
    return N / np.linalg.norm(N, axis=1, keepdims=True)


def angle_defect(mesh: TriMesh) -> np.ndarray:
    angles, _ = _corner_angles(mesh)
    total = np.bincount(mesh.faces.ravel(), weights=angles.ravel(), minlength=len(mesh.vertices))
    full = np.full(len(mesh.vertices), 2 * np.pi)
    if not mesh.closed:
        full[mesh.boundary_vertices()] = np.pi
    return full - total


# ---------------------------------------------------------------------------
# profile primitives
# ---------------------------------------------------------------------------


def _profile_neighbours(p: AxisymProfile):
    """Neighbour indices and spacings for the active nodes (ghosts resolved)."""
    x = p.grid
    if p.boundary == "periodic":
        m = len(x) - 1
        idx = np.arange(m)
        im, ip = (idx - 1) % m, (idx + 1) % m
        xx = x[:m]
        hm = np.empty(m)
        hp = np.empty(m)
        hm[1:] = np.diff(xx)
        hm[0] = x[-1] - x[-2]
        hp[:-1] = np.diff(xx)
        hp[-1] = x[-1] - x[-2]
    else:
        m = len(x)
        idx = np.arange(m)
        im, ip = idx - 1, idx + 1
        im[0], ip[-1] = 1, m - 2
        h = np.diff(x)
        hm = np.concatenate([[h[0]], h])
        hp = np.concatenate([h, [h[-1]]])
    return im, ip, hm, hp


def profile_derivatives(p: AxisymProfile) -> tuple[np.ndarray, np.ndarray]:
    """First and second x-derivatives of u on the active nodes."""
    u = p.radii[p.active]
    im, ip, hm, hp = _profile_neighbours(p)
    den = hm * hp * (hm + hp)
    ux = (hm**2 * u[ip] - hp**2 * u[im] + (hp**2 - hm**2) * u) / den
    uxx = 2.0 * (hm * u[ip] - (hm + hp) * u + hp * u[im]) / den
    return ux, uxx


def profile_second_difference(p: AxisymProfile) -> sp.csr_matrix:
    """Sparse D2 on the active nodes, consistent with ``profile_derivatives``."""
    im, ip, hm, hp = _profile_neighbours(p)
    m = len(im)
    den = hm * hp * (hm + hp)
    idx = np.arange(m)
    D = sp.coo_matrix(
        (
            np.concatenate([2 * hm / den, -2 * (hm + hp) / den, 2 * hp / den]),
            (np.concatenate([idx, idx, idx]), np.concatenate([ip, idx, im])),
        ),
        shape=(m, m),
    )
    return D.tocsr()


def profile_trapezoid_weights(p: AxisymProfile) -> np.ndarray:
    _, _, hm, hp = _profile_neighbours(p)
    w = 0.5 * (hm + hp)
    if p.boundary == "reflecting":
        w[0], w[-1] = 0.5 * hp[0], 0.5 * hm[-1]
    return w


def profile_curvatures(p: AxisymProfile) -> tuple[np.ndarray, np.ndarray]:
    """Rotational and meridian principal curvatures on the active nodes."""
    u = p.radii[p.active]
    ux, uxx = profile_derivatives(p)
    g = np.sqrt(1.0 + ux**2)
    return 1.0 / (u * g), -uxx / g**3


# ---------------------------------------------------------------------------
# quadrature sets
# ---------------------------------------------------------------------------


@dataclass
class Quadrature:
    """Weighted sample of a surface.

    ``interp`` maps per-vertex (mesh) or per-node (profile) arrays onto the
    quadrature points; it is ``None`` for exact surfaces, whose "vertices"
    are the quadrature points themselves.
    """

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    H: np.ndarray
    A2: np.ndarray
    n: int
    interp: sp.csr_matrix | None = None

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.ndim == 0:
            return float(self.weights.sum() * values)
        return float(np.dot(self.weights, values))

    def mask(self, keep: np.ndarray) -> "Quadrature":
        return Quadrature(
            self.points[keep],
            self.weights[keep],
            self.normals[keep],
            self.H[keep],
            self.A2[keep],
            self.n,
            None if self.interp is None else self.interp[keep],
        )


# degree-2 interior rule
_TRI_RULE = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])


def _mesh_quadrature_from_bary(mesh, face_idx, bary, weights, H, A2, nrm):
    """Quadrature points given per-point face index and barycentric coords."""
    F = mesh.faces[face_idx]
    nv = len(mesh.vertices)
    q = len(face_idx)
    P = sp.csr_matrix(
        (bary.ravel(), F.ravel(), np.arange(0, 3 * q + 1, 3)), shape=(q, nv)
    )
    normals = P @ nrm
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return Quadrature(P @ mesh.vertices, weights, normals, P @ H, P @ A2, 2, P)


def mesh_quadrature(mesh: TriMesh, faces: np.ndarray | None = None) -> Quadrature:
    fidx = np.arange(len(mesh.faces)) if faces is None else np.asarray(faces)
    H, nrm = mean_curvature(mesh)
    A2 = second_form_norm(mesh)
    fa = face_areas(mesh)[fidx]
    face_idx = np.repeat(fidx, 3)
    bary = np.tile(_TRI_RULE, (len(fidx), 1))
    w = np.repeat(fa / 3.0, 3)
    return _mesh_quadrature_from_bary(mesh, face_idx, bary, w, H, A2, nrm)


def profile_quadrature(p: AxisymProfile, n_angle: int = 64, images: int = 0) -> Quadrature:
    """Trapezoid in x times uniform angles; optional mirror/periodic images."""
    u = p.radii[p.active]
    x = p.grid[p.active]
    ux, _ = profile_derivatives(p)
    k1, k2 = profile_curvatures(p)
    g = np.sqrt(1.0 + ux**2)
    wx = profile_trapezoid_weights(p) * u * g
    phi = 2 * np.pi * np.arange(n_angle) / n_angle
    m = len(x)

    # copy j of the unfolded surface occupies [x0 + jL, x0 + (j+1)L]; for
    # reflecting profiles odd copies are mirrored
    L = p.period
    copies = [(x, ux)]
    for j in [k for i in range(1, images + 1) for k in (i, -i)]:
        if p.boundary == "reflecting" and j % 2:
            copies.append((p.grid[0] + p.grid[-1] - x + j * L, -ux))
        else:
            copies.append((x + j * L, ux))

    pts, nrms, ws, Hs, A2s, nodes = [], [], [], [], [], []
    c, s = np.cos(phi), np.sin(phi)
    node = np.arange(m)
    for xc, uxc in copies:
        X = np.repeat(xc, n_angle)
        R = np.repeat(u, n_angle)
        C = np.tile(c, m)
        S = np.tile(s, m)
        G = np.repeat(g, n_angle)
        pts.append(np.column_stack([X, R * C, R * S]))
        nrms.append(np.column_stack([-np.repeat(uxc, n_angle) / G, C / G, S / G]))
        ws.append(np.repeat(wx, n_angle) * (2 * np.pi / n_angle))
        Hs.append(np.repeat(k1 + k2, n_angle))
        A2s.append(np.repeat(k1**2 + k2**2, n_angle))
        nodes.append(np.repeat(node, n_angle))
    nodes = np.concatenate(nodes)
    q = len(nodes)
    P = sp.csr_matrix((np.ones(q), nodes, np.arange(q + 1)), shape=(q, m))
    return Quadrature(
        np.concatenate(pts),
        np.concatenate(ws),
        np.concatenate(nrms),
        np.concatenate(Hs),
        np.concatenate(A2s),
        2,
        P,
    )


def _orthonormal_frame(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.eye(3)[np.argmin(np.abs(d))]
    e1 = np.cross(d, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


def exact_quadrature(s: ExactSurface, order: int = 48) -> Quadrature:
    """High-order nodes: Gauss-Legendre in the non-periodic direction."""
    if s.kind == "sphere":
        if s.n == 1:
            phi = 2 * np.pi * np.arange(4 * order) / (4 * order)
            nrm = np.column_stack([np.cos(phi), np.sin(phi)])
            w = np.full(len(phi), 2 * np.pi * s.radius / len(phi))
        elif s.n == 2:
            z, wz = np.polynomial.legendre.leggauss(order)
            phi = 2 * np.pi * np.arange(2 * order) / (2 * order)
            Z = np.repeat(z, len(phi))
            Phi = np.tile(phi, order)
            rho = np.sqrt(1 - Z**2)
            nrm = np.column_stack([rho * np.cos(Phi), rho * np.sin(Phi), Z])
            w = np.repeat(wz, len(phi)) * (2 * np.pi / len(phi)) * s.radius**2
        else:
            raise NotImplementedError("node quadrature for spheres with n > 2")
        pts = s.center + s.radius * nrm
    elif s.kind == "cylinder":
        if not np.isfinite(s.half_length):
            raise ValueError("cylinder quadrature needs a finite half_length")
        L = s.half_length
        # composite Gauss-Legendre keeps node spacing bounded for long cylinders
        panels = max(1, int(np.ceil(2 * L / 0.25)))
        zg, wg = np.polynomial.legendre.leggauss(8)
        edges = np.linspace(-L, L, panels + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        z = (mid[:, None] + half[:, None] * zg).ravel()
        wz = (half[:, None] * wg).ravel()
        n_phi = 2 * order
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        e1, e2 = _orthonormal_frame(s.direction)
        radial = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
        nrm = np.tile(radial, (len(z), 1))
        Z = np.repeat(z, n_phi)
        pts = s.center + Z[:, None] * s.direction + s.radius * nrm
        w = np.repeat(wz, n_phi) * (2 * np.pi * s.radius / n_phi)
    else:
        if s.n != 2:
            raise NotImplementedError("node quadrature for planes with n != 2")
        R = s.half_length if np.isfinite(s.half_length) else 12.0
        rg, wr = np.polynomial.legendre.leggauss(order)
        r = 0.5 * R * (rg + 1)
        wr = 0.5 * R * wr * r
        n_phi = 2 * order
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        e1, e2 = _orthonormal_frame(s.direction)
        Rr = np.repeat(r, n_phi)
        Phi = np.tile(phi, order)
        pts = s.center + Rr[:, None] * (np.cos(Phi)[:, None] * e1 + np.sin(Phi)[:, None] * e2)
        nrm = np.tile(s.direction, (len(pts), 1))
        w = np.repeat(wr, n_phi) * (2 * np.pi / n_phi)
    q = len(w)
    return Quadrature(pts, w, nrm, np.full(q, s.H), np.full(q, s.A2), s.n)


@functools.singledispatch
def quadrature(state, **kw) -> Quadrature:
    raise TypeError(f"not a surface state: {type(state).__name__}")


@quadrature.register
def _(state: TriMesh, faces=None, **kw):
    return mesh_quadrature(state, faces)


@quadrature.register
def _(state: AxisymProfile, n_angle: int = 64, images: int = 0, **kw):
    return profile_quadrature(state, n_angle, images)


@quadrature.register
def _(state: ExactSurface, order: int = 48, **kw):
    return exact_quadrature(state, order)


# ---------------------------------------------------------------------------
# curvature operations
# ---------------------------------------------------------------------------


@functools.singledispatch
def mean_curvature(state) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex mean curvature H and unit normal nu."""
    raise TypeError(f"not a surface state: {type(state).__name__}")


@mean_curvature.register
def _(state: TriMesh):
    W = cotan_stiffness(state)
    areas, _ = mixed_areas(state)
    Hn = (W @ state.vertices) / areas[:, None]
    nrm = vertex_normals(state)
    return np.einsum("ij,ij->i", Hn, nrm), nrm


@mean_curvature.register
def _(state: AxisymProfile):
    k1, k2 = profile_curvatures(state)
    ux, _ = profile_derivatives(state)
    g = np.sqrt(1 + ux**2)
    # meridian plane (phi = 0): nu = (-u_x, 1, 0)/g
    nrm = np.column_stack([-ux / g, 1 / g, np.zeros_like(g)])
    return k1 + k2, nrm


@mean_curvature.register
def _(state: ExactSurface):
    q = exact_quadrature(state)
    return q.H, q.normals


@functools.singledispatch
def _second_form(state) -> tuple[np.ndarray, int]:
    raise TypeError(f"not a surface state: {type(state).__name__}")


@_second_form.register
def _(state: TriMesh):
    H, _ = mean_curvature(state)
    areas, _ = mixed_areas(state)
    K = angle_defect(state) / areas
    A2 = H**2 - 2 * K
    neg = A2 < 0
    return np.where(neg, 0.0, A2), int(neg.sum())


@_second_form.register
def _(state: AxisymProfile):
    k1, k2 = profile_curvatures(state)
    return k1**2 + k2**2, 0


@_second_form.register
def _(state: ExactSurface):
    return exact_quadrature(state).A2, 0


def second_form_norm(state: SurfaceState, report_clamped: bool = False):
    """Per-vertex |A|^2 from |A|^2 = H^2 - 2K (exact on profiles and exact surfaces).

    Negative mesh values are clamped at zero; pass ``report_clamped=True`` to
    get ``(values, clamp_count)``.
    """
    A2, clamped = _second_form(state)
    if clamped:
        logger.debug("clamped %d negative |A|^2 values", clamped)
    return (A2, clamped) if report_clamped else A2


def max_A2(state: SurfaceState) -> float:
    if isinstance(state, ExactSurface):
        return state.A2
    return float(np.max(second_form_norm(state)))


def vertex_positions(state: SurfaceState) -> np.ndarray:
    """Points at which per-vertex quantities live (meridian nodes for profiles)."""
    if isinstance(state, TriMesh):
        return state.vertices
    if isinstance(state, AxisymProfile):
        u = state.radii[state.active]
        return np.column_stack([state.grid[state.active], u, np.zeros_like(u)])
    return exact_quadrature(state).points


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _evaluate(q: Quadrature, f) -> np.ndarray:
    if callable(f):
        return np.asarray(f(q.points), dtype=float)
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        return np.full(len(q.weights), float(f))
    if q.interp is None:
        if len(f) != len(q.weights):
            raise ValueError("per-vertex array does not match the quadrature nodes")
        return f
    return q.interp @ f


def surface_integral(
    state: SurfaceState, f: Callable[[np.ndarray], np.ndarray] | np.ndarray | float, **kw
) -> float:
    """Integral of ``f`` over the surface.

    ``f`` is a callable on (Q, d) points, a per-vertex (per-node) array, or a
    constant. Meshes use a 3-point barycentric rule per face (``faces=`` picks a
    subset); profiles use trapezoid-in-x times uniform angles.
    """
    q = quadrature(state, **kw)
    return q.integrate(_evaluate(q, f))


def area(state: SurfaceState) -> float:
    if isinstance(state, TriMesh):
        return float(face_areas(state).sum())
    if isinstance(state, AxisymProfile):
        return surface_integral(state, 1.0, n_angle=1)
    if state.kind == "sphere":
        return float(sphere_area(state.n) * state.radius**state.n)
    if state.kind == "cylinder":
        return float(2 * np.pi * state.radius * 2 * state.half_length)
    return np.inf


def sphere_area(n: int) -> float:
    """Area of the unit n-sphere in R^{n+1}."""
    from scipy.special import gamma

    return float(2 * np.pi ** ((n + 1) / 2) / gamma((n + 1) / 2))


# ---------------------------------------------------------------------------
# metric balls and distances
# ---------------------------------------------------------------------------


def _subdivision_template(depth: int) -> np.ndarray:
    """Barycentric corners of the 4**depth midpoint-subdivided triangles."""
    tris = [np.eye(3)]
    for _ in range(depth):
        nxt = []
        for t in tris:
            a, b, c = t
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            nxt += [np.array([a, ab, ca]), np.array([ab, b, bc]), np.array([ca, bc, c]), np.array([ab, bc, ca])]
        tris = nxt
    return np.asarray(tris)


def restrict_to_ball(state: SurfaceState, x0, sigma: float, depth: int = 4, **kw) -> Quadrature:
    """Quadrature of the part of the surface inside the open ball B(x0, sigma).

    Mesh faces entirely inside are kept whole; faces that may cross the sphere
    are split ``4**depth`` ways and sub-triangles are kept by centroid.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x0 = np.asarray(x0, dtype=float)
    if not isinstance(state, TriMesh):
        q = quadrature(state, **kw)
        return q.mask(np.linalg.norm(q.points - x0, axis=1) < sigma)

    V, F = state.vertices, state.faces
    d = np.linalg.norm(V - x0, axis=1)
    inside = (d[F] < sigma).all(axis=1)
    v = V[F]
    cen = v.mean(axis=1)
    rad = np.linalg.norm(v - cen[:, None], axis=2).max(axis=1)
    maybe = ~inside & (np.linalg.norm(cen - x0, axis=1) < sigma + rad)

    H, nrm = mean_curvature(state)
    A2 = second_form_norm(state)
    fa = face_areas(state)
    fin = np.flatnonzero(inside)
    face_idx = [np.repeat(fin, 3)]
    bary = [np.tile(_TRI_RULE, (len(fin), 1))]
    wts = [np.repeat(fa[fin] / 3.0, 3)]

    cut = np.flatnonzero(maybe)
    if len(cut):
        tpl = _subdivision_template(depth)  # (S, 3, 3)
        S = len(tpl)
        sub_cen = tpl.mean(axis=1)  # (S, 3) barycentric
        pos = np.einsum("sk,fkd->fsd", sub_cen, v[cut])
        keep = np.linalg.norm(pos - x0, axis=2) < sigma  # (C, S)
        fi, si = np.nonzero(keep)
        # 3-point rule inside each kept sub-triangle
        sub_pts = np.einsum("rk,skj->srj", _TRI_RULE, tpl)  # (S, 3, 3)
        face_idx.append(np.repeat(cut[fi], 3))
        bary.append(sub_pts[si].reshape(-1, 3))
        wts.append(np.repeat(fa[cut[fi]] / S / 3.0, 3))

    face_idx = np.concatenate(face_idx).astype(np.int64)
    if len(face_idx) == 0:
        return Quadrature(
            np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)), np.zeros(0), np.zeros(0), 2,
            sp.csr_matrix((0, len(V))),
        )
    return _mesh_quadrature_from_bary(
        state, face_idx, np.concatenate(bary), np.concatenate(wts), H, A2, nrm
    )


def closest_points_on_triangles(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Closest point to ``p`` on each triangle of ``tri`` (F, 3, 3)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 1.0 / (va + vb + vc)
        out = a + ab * (vb * denom)[:, None] + ac * (vc * denom)[:, None]
        # edge regions, later assignments take precedence in the usual order
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        m = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
        out[m] = (b + w_bc[:, None] * (c - b))[m]
        w_ac = d2 / (d2 - d6)
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        out[m] = (a + w_ac[:, None] * ac)[m]
        w_ab = d1 / (d1 - d3)
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        out[m] = (a + w_ab[:, None] * ab)[m]
    m = (d6 >= 0) & (d5 <= d6)
    out[m] = c[m]
    m = (d3 >= 0) & (d4 <= d3)
    out[m] = b[m]
    m = (d1 <= 0) & (d2 <= 0)
    out[m] = a[m]
    return out


def distance_to_surface(state: SurfaceState, y) -> float:
    """Euclidean distance from the point ``y`` to the surface."""
    y = np.asarray(y, dtype=float)
    if isinstance(state, TriMesh):
        cp = closest_points_on_triangles(y, state.vertices[state.faces])
        return float(np.min(np.linalg.norm(cp - y, axis=1)))
    if isinstance(state, AxisymProfile):
        # distance in the meridian half-plane to the polyline (x_i, u_i)
        r0 = np.hypot(y[1], y[2])
        x, u = state.grid, state.radii.copy()
        if state.boundary == "periodic":
            u[-1] = u[0]
        P = np.column_stack([x, u])
        a, b = P[:-1], P[1:]
        q = np.array([y[0], r0])
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", q - a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
        c = a + t[:, None] * ab
        return float(np.min(np.linalg.norm(c - q, axis=1)))
    s = state
    if s.kind == "sphere":
        return abs(float(np.linalg.norm(y - s.center)) - s.radius)
    if s.kind == "cylinder":
        rel = y - s.center
        z = float(rel @ s.direction)
        dax = float(np.linalg.norm(rel - z * s.direction))
        dz = max(0.0, abs(z) - s.half_length)
        return float(np.hypot(dax - s.radius, dz)) if dz else abs(dax - s.radius)
    return abs(float((y - s.center) @ s.direction))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def icosphere(subdivisions: int = 4, radius: float = 1.0, center=(0.0, 0.0, 0.0), time: float = 0.0) -> TriMesh:
    t = (1 + np.sqrt(5)) / 2
    V = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0], [0, -1, t], [0, 1, t],
         [0, -1, -t], [0, 1, -t], [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    F = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
         [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
         [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    for _ in range(subdivisions):
        edges = np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1)
        uniq, inv = np.unique(edges, axis=0, return_inverse=True)
        inv = inv.ravel()
        mids = V[uniq].mean(axis=1)
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        m = len(F)
        ab, bc, ca = inv[:m] + len(V), inv[m:2 * m] + len(V), inv[2 * m:] + len(V)
        a, b, c = F.T
        F = np.concatenate(
            [np.column_stack(x) for x in ([a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca])]
        )
        V = np.concatenate([V, mids])
    return TriMesh(np.asarray(center, float) + radius * V, F, time)


def flat_patch(n: int = 10, size: float = 1.0, time: float = 0.0, jitter: float = 0.0, seed: int = 0) -> TriMesh:
    """Triangulated square [0, size]^2 in the z = 0 plane (open mesh)."""
    s = np.linspace(0.0, size, n + 1)
    X, Y = np.meshgrid(s, s, indexing="ij")
    V = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    if jitter:
        rng = np.random.default_rng(seed)
        interior = (X.ravel() > 0) & (X.ravel() < size) & (Y.ravel() > 0) & (Y.ravel() < size)
        V[interior, :2] += jitter * size / n * rng.uniform(-1, 1, (interior.sum(), 2))
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    F = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return TriMesh(V, F, time, closed=False)


def tube_mesh(radius: float = 1.0, half_length: float = 3.0, n_around: int = 48, n_along: int = 60, time: float = 0.0) -> TriMesh:
    """Open cylindrical tube about the x-axis with outward-oriented faces."""
    phi = 2 * np.pi * np.arange(n_around) / n_around
    x = np.linspace(-half_length, half_length, n_along + 1)
    X, P = np.meshgrid(x, phi, indexing="ij")
    V = np.column_stack([X.ravel(), radius * np.cos(P.ravel()), radius * np.sin(P.ravel())])
    idx = np.arange(len(V)).reshape(n_along + 1, n_around)
    nxt = np.roll(idx, -1, axis=1)
    a, b = idx[:-1].ravel(), idx[1:].ravel()
    c, d = nxt[1:].ravel(), nxt[:-1].ravel()
    F = np.concatenate([np.column_stack([a, d, c]), np.column_stack([a, c, b])])
    return TriMesh(V, F, time, closed=False)
