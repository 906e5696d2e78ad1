"""Triangle mesh container, OBJ I/O, discrete operators and curvature."""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import (
    DegenerateFace,
    DegenerateStar,
    NonManifold,
    NotClosed,
    NotConverged,
    ParseError,
)

AREA_EPS = 1e-14


@dataclass(eq=False)
class TriangleMesh:
    """A closed, consistently oriented manifold triangle mesh.

    Faces are oriented counter-clockwise when seen from outside. ``scale``
    records the factor applied by :func:`normalize_area` relative to the
    loaded model units.
    """

    vertices: np.ndarray
    faces: np.ndarray
    scale: float = 1.0
    name: str = "mesh"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)

    @classmethod
    def from_arrays(cls, vertices, faces, *, name="mesh", check=True, orient=True):
        mesh = cls(vertices, faces, name=name)
        if check:
            mesh.validate()
        if orient and mesh.signed_volume() < 0:
            mesh = cls(mesh.vertices, mesh.faces[:, ::-1], name=name)
        return mesh

    def copy_with(self, vertices=None, scale=None):
        return TriangleMesh(
            self.vertices.copy() if vertices is None else vertices,
            self.faces.copy(),
            scale=self.scale if scale is None else scale,
            name=self.name,
        )

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    # -- combinatorics -------------------------------------------------

    @cached_property
    def edges(self):
        """Unique undirected edges, sorted (a < b), shape (E, 2)."""
        he = self.halfedges
        und = np.sort(he, axis=1)
        return np.unique(und, axis=0)

    @cached_property
    def halfedges(self):
        f = self.faces
        return np.concatenate(
            [f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0
        )

    @cached_property
    def edge_faces(self):
        """Map undirected edge (a, b), a < b, to the list of incident faces."""
        out = {}
        for fi, (a, b, c) in enumerate(self.faces.tolist()):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                out.setdefault(key, []).append(fi)
        return out

    @cached_property
    def directed_face(self):
        """Map directed half-edge (u, v) to the face containing it."""
        out = {}
        for fi, (a, b, c) in enumerate(self.faces.tolist()):
            out[(a, b)] = fi
            out[(b, c)] = fi
            out[(c, a)] = fi
        return out

    @cached_property
    def face_adjacency(self):
        """Pairs of faces sharing an edge, shape (E, 2)."""
        pairs = [fs for fs in self.edge_faces.values() if len(fs) == 2]
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def neighbors(self):
        nbrs = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges.tolist():
            nbrs[a].add(b)
            nbrs[b].add(a)
        return [np.array(sorted(s), dtype=np.int64) for s in nbrs]

    @cached_property
    def one_rings(self):
        """Counter-clockwise ordered neighbour cycle of each vertex."""
        succ = [dict() for _ in range(self.n_vertices)]
        for a, b, c in self.faces.tolist():
            succ[a][b] = c
            succ[b][c] = a
            succ[c][a] = b
        rings = []
        for v, nxt in enumerate(succ):
            if not nxt:
                rings.append(np.zeros(0, dtype=np.int64))
                continue
            start = min(nxt)
            ring = [start]
            cur = nxt[start]
            while cur != start:
                ring.append(cur)
                cur = nxt.get(cur)
                if cur is None or len(ring) > len(nxt):
                    raise NonManifold(f"vertex {v} has a non-manifold one-ring")
            if len(ring) != len(nxt):
                raise NonManifold(f"vertex {v} is a non-manifold junction")
            rings.append(np.array(ring, dtype=np.int64))
        return rings

    @cached_property
    def vertex_faces(self):
        vf = [[] for _ in range(self.n_vertices)]
        for fi, tri in enumerate(self.faces.tolist()):
            for v in tri:
                vf[v].append(fi)
        return vf

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_faces

    def genus(self):
        return (2 - self.euler_characteristic()) // 2

    def validate(self):
        if self.faces.size == 0:
            raise ParseError("mesh has no faces")
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise ParseError("face index out of range")
        if np.any(self.faces[:, 0] == self.faces[:, 1]) or np.any(
            self.faces[:, 1] == self.faces[:, 2]
        ) or np.any(self.faces[:, 0] == self.faces[:, 2]):
            raise DegenerateFace("face with repeated vertex")
        for (a, b), fs in self.edge_faces.items():
            if len(fs) == 1:
                raise NotClosed(f"boundary edge ({a}, {b})")
            if len(fs) != 2:
                raise NonManifold(f"edge ({a}, {b}) has {len(fs)} incident faces")
        directed = set()
        for u, v in self.halfedges.tolist():
            if (u, v) in directed:
                raise NonManifold(f"inconsistent orientation at edge ({u}, {v})")
            directed.add((u, v))
        if np.any(self.face_areas <= AREA_EPS * max(self.area(), 1.0)):
            raise DegenerateFace("zero-area face")
        self.one_rings  # raises on non-manifold vertices

    # -- geometry ------------------------------------------------------

    def _corners(self, vertices=None):
        v = self.vertices if vertices is None else vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    @cached_property
    def face_cross(self):
        a, b, c = self._corners()
        return np.cross(b - a, c - a)

    @cached_property
    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def face_normals(self):
        n = self.face_cross
        return n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)

    @cached_property
    def vertex_areas(self):
        """Barycentric (one third) vertex areas."""
        va = np.zeros(self.n_vertices)
        np.add.at(va, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        return va

    @cached_property
    def vertex_normals(self):
        vn = np.zeros((self.n_vertices, 3))
        for k in range(3):
            np.add.at(vn, self.faces[:, k], self.face_cross)
        return vn / np.maximum(np.linalg.norm(vn, axis=1, keepdims=True), 1e-300)

    @cached_property
    def face_centroids(self):
        return self.vertices[self.faces].mean(axis=1)

    @cached_property
    def corner_angles(self):
        """Interior angle at each face corner, shape (F, 3)."""
        a, b, c = self._corners()
        out = np.empty((self.n_faces, 3))
        for k, (p, q, r) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
            u, v = q - p, r - p
            out[:, k] = np.arctan2(
                np.linalg.norm(np.cross(u, v), axis=1), np.einsum("ij,ij->i", u, v)
            )
        return out

    def area(self):
        return float(self.face_areas.sum())

    def signed_volume(self):
        a, b, c = self._corners()
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def mean_edge_length(self):
        e = self.edges
        return float(
            np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean()
        )

    # -- discrete operators --------------------------------------------

    @cached_property
    def cotan_stiffness(self):
        return cotan_stiffness(self.vertices, self.faces)

    @cached_property
    def mass(self):
        return sparse.diags(self.vertex_areas)

    @cached_property
    def gradient_basis(self):
        """Per-face gradient of the three hat functions, shape (F, 3, 3)."""
        return hat_gradients(self.vertices, self.faces)

    def face_gradient(self, values):
        """Gradient of a piecewise-linear per-vertex function, per face."""
        return np.einsum("fkd,fk->fd", self.gradient_basis, values[self.faces])


def hat_gradients(vertices, faces):
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    n = np.cross(b - a, c - a)
    dbl = np.linalg.norm(n, axis=1)
    nhat = n / np.maximum(dbl, 1e-300)[:, None]
    out = np.empty((len(faces), 3, 3))
    # grad phi_i = (N x e_i) / (2A), e_i the edge opposite vertex i (CCW)
    out[:, 0] = np.cross(nhat, c - b)
    out[:, 1] = np.cross(nhat, a - c)
    out[:, 2] = np.cross(nhat, b - a)
    return out / np.maximum(dbl, 1e-300)[:, None, None]


def cotan_stiffness(vertices, faces):
    """Positive semi-definite cotangent stiffness matrix (weak -Laplacian)."""
    n = len(vertices)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = faces[:, (k + 1) % 3], faces[:, (k + 2) % 3], faces[:, k]
        u = vertices[i] - vertices[o]
        v = vertices[j] - vertices[o]
        cot = np.einsum("ij,ij->i", u, v) / np.maximum(
            np.linalg.norm(np.cross(u, v), axis=1), 1e-300
        )
        w = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    K = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return K.tocsr()


# -- I/O -----------------------------------------------------------------


def read_obj(path):
    """Read vertex and face records of a Wavefront OBJ; polygons are fanned."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    verts, faces = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise ValueError("face with fewer than 3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not verts or not faces:
        raise ParseError(f"{path}: no geometry")
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


def load_mesh(path):
    verts, faces = read_obj(path)
    return TriangleMesh.from_arrays(verts, faces, name=Path(path).stem)


def save_obj(mesh, path, *, groups=None, uv=None, colors=None):
    """Write ``mesh`` as OBJ.

    ``groups`` is an optional per-face integer label written as ``g`` records,
    ``uv`` an optional (V, 2) array written as ``vt`` records and ``colors`` an
    optional (V, 3) array appended to the ``v`` records.
    """
    lines = [f"# {mesh.name}"]
    for i, p in enumerate(mesh.vertices):
        rec = f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}"
        if colors is not None:
            c = colors[i]
            rec += f" {c[0]:.6g} {c[1]:.6g} {c[2]:.6g}"
        lines.append(rec)
    if uv is not None:
        lines += [f"vt {u:.9g} {v:.9g}" for u, v in uv]

    def face_rec(tri):
        if uv is None:
            return "f " + " ".join(str(i + 1) for i in tri)
        return "f " + " ".join(f"{i + 1}/{i + 1}" for i in tri)

    if groups is None:
        lines += [face_rec(t) for t in mesh.faces.tolist()]
    else:
        groups = np.asarray(groups)
        for gid in np.unique(groups):
            lines.append(f"g segment_{gid}")
            lines += [face_rec(t) for t in mesh.faces[groups == gid].tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


# -- normalization and curvature -------------------------------------------


def normalize_area(mesh):
    """Uniformly scale ``mesh`` about the origin to total area 1."""
    area = mesh.area()
    s = 1.0 / np.sqrt(area)
    if abs(s - 1.0) < 1e-15:
        return mesh.copy_with()
    return mesh.copy_with(vertices=mesh.vertices * s, scale=mesh.scale * s)


@dataclass
class CurvatureField:
    """Per-vertex curvatures; convex regions have positive mean curvature.

    ``shape_tensor[v]`` is the 3x3 symmetric tensor sum(k_i d_i d_i^T) over
    the principal pairs, so the normal curvature along a unit tangent ``d``
    is ``d @ shape_tensor[v] @ d`` in the same convex-positive convention.
    """

    gaussian: np.ndarray
    mean: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    dir1: np.ndarray
    dir2: np.ndarray
    normals: np.ndarray

    @property
    def shape_tensor(self):
        return self.k1[:, None, None] * np.einsum("vi,vj->vij", self.dir1, self.dir1) + (
            self.k2[:, None, None] * np.einsum("vi,vj->vij", self.dir2, self.dir2)
        )

    @property
    def max_abs(self):
        """Signed principal curvature of largest magnitude and its direction."""
        pick = np.abs(self.k1) >= np.abs(self.k2)
        k = np.where(pick, self.k1, self.k2)
        d = np.where(pick[:, None], self.dir1, self.dir2)
        return k, d


def gaussian_and_mean(mesh):
    """Angle-defect Gaussian curvature and cotan mean curvature per vertex."""
    area = mesh.vertex_areas
    if np.any(area <= AREA_EPS):
        bad = int(np.argmin(area))
        raise DegenerateStar(f"vertex {bad} has a collapsed one-ring")
    angle_sum = np.zeros(mesh.n_vertices)
    np.add.at(angle_sum, mesh.faces.ravel(), mesh.corner_angles.ravel())
    gaussian = (2 * np.pi - angle_sum) / area
    hn = mesh.cotan_stiffness @ mesh.vertices
    mean = np.einsum("ij,ij->i", hn, mesh.vertex_normals) / (2 * area)
    return gaussian, mean


def two_ring(mesh, v):
    ring1 = mesh.neighbors[v]
    out = set(ring1.tolist())
    for u in ring1:
        out.update(mesh.neighbors[u].tolist())
    out.discard(v)
    return np.array(sorted(out), dtype=np.int64)


def _tangent_frame(n):
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def compute_curvatures(mesh):
    gaussian, mean = gaussian_and_mean(mesh)
    normals = mesh.vertex_normals
    nv = mesh.n_vertices
    k1 = np.zeros(nv)
    k2 = np.zeros(nv)
    dir1 = np.zeros((nv, 3))
    dir2 = np.zeros((nv, 3))
    for v in range(nv):
        n = normals[v]
        e1, e2 = _tangent_frame(n)
        nb = two_ring(mesh, v)
        d = mesh.vertices[nb] - mesh.vertices[v]
        u, w, h = d @ e1, d @ e2, d @ n
        if len(nb) < 5:
            raise DegenerateStar(f"vertex {v} has too few neighbours for a fit")
        A = np.column_stack([u * u, u * w, w * w, u, w])
        coef, *_ = np.linalg.lstsq(A, h, rcond=None)
        a, b, c = coef[:3]
        # points of a convex patch fall below the tangent plane
        S = -np.array([[2 * a, b], [b, 2 * c]])
        vals, vecs = np.linalg.eigh(S)
        k1[v], k2[v] = vals[1], vals[0]
        dir1[v] = vecs[0, 1] * e1 + vecs[1, 1] * e2
        dir2[v] = vecs[0, 0] * e1 + vecs[1, 0] * e2
    return CurvatureField(gaussian, mean, k1, k2, dir1, dir2, normals)


# area-normalized units; a unit-area sphere has mean curvature ~3.5
MEAN_TOL = 1e-3
GAUSS_TOL = 1e-6


def crater_mask(gaussian, mean):
    # tolerances keep round-off on flat regions out of the mask
    return (mean < -MEAN_TOL) & (gaussian > GAUSS_TOL)


def dilate(mesh, mask, rings=1):
    out = mask.copy()
    for _ in range(rings):
        grown = out.copy()
        for v in np.flatnonzero(out):
            grown[mesh.neighbors[v]] = True
        out = grown
    return out


def smooth_craters(mesh, curv=None, *, dt=1e-3, max_iters=200):
    """Localized conformal mean-curvature flow that removes craters.

    Craters are vertices with negative mean and positive Gaussian curvature.
    The flow acts on the crater vertices dilated by one ring and stops once no
    crater remains and every vertex ever flagged has non-negative mean
    curvature. The result is rescaled to the input area.
    """
    if curv is None:
        gaussian, mean = gaussian_and_mean(mesh)
    else:
        gaussian, mean = curv.gaussian, curv.mean
    flagged = crater_mask(gaussian, mean)
    if not flagged.any():
        return mesh.copy_with()
    target_area = mesh.area()
    stiffness = mesh.cotan_stiffness
    x = mesh.vertices.copy()
    current = mesh
    ever = flagged.copy()
    for _ in range(max_iters):
        active = crater_mask(gaussian, mean) | (ever & (mean < -MEAN_TOL))
        if not active.any():
            break
        ever |= active
        weight = dilate(current, active).astype(float)
        M = sparse.diags(current.vertex_areas)
        A = (M + dt * sparse.diags(weight) @ stiffness).tocsc()
        x = splinalg.spsolve(A, M @ x)
        current = mesh.copy_with(vertices=x)
        gaussian, mean = gaussian_and_mean(current)
    else:
        remaining = int(
            (crater_mask(gaussian, mean) | (ever & (mean < -MEAN_TOL))).sum()
        )
        if remaining:
            raise NotConverged(
                f"crater smoothing left {remaining} vertices after {max_iters} steps",
                remaining,
            )
    s = np.sqrt(target_area / current.area())
    return mesh.copy_with(vertices=x * s)
