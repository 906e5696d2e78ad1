"""Per-segment cut and the column function g.

g is the least-squares solution of ``<J grad f, grad g> = target`` with g
fixed to zero along one side of the cut, so along every isoline of f it
measures (target-weighted) arc length from the cut.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg
from scipy.sparse.csgraph import dijkstra

from .errors import NoPath, SolverFailure
from .mesh import hat_gradients

ALPHA = 10.0
REGULARIZER = 1e-3


@dataclass
class CutSegment:
    """A segment opened along a cut into a disk.

    ``faces`` index into ``vertices`` (cut-mesh ids); ``to_mesh`` maps each
    cut-mesh vertex to the original mesh vertex and ``boundary`` lists the
    cut-mesh vertices where g = 0.
    """

    segment: object
    path: np.ndarray
    vertices: np.ndarray
    faces: np.ndarray
    mesh_faces: np.ndarray
    to_mesh: np.ndarray
    boundary: np.ndarray

    @property
    def euler_characteristic(self):
        F = self.faces
        e = np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1)
        n_e = len(np.unique(e, axis=0))
        return len(np.unique(F)) - n_e + len(F)

    @property
    def is_disk(self):
        return self.euler_characteristic == 1

    @property
    def cut_edges(self):
        """Undirected mesh edges of the cut path."""
        return {tuple(sorted(e)) for e in zip(self.path[:-1].tolist(), self.path[1:].tolist())}


def _walk(mesh, in_seg, v, start_face, stop, forward=True):
    """Faces around ``v`` from ``start_face`` until ``stop(face)`` or the boundary."""
    out = []
    fi = start_face
    for _ in range(64):
        out.append(fi)
        tri = mesh.faces[fi].tolist()
        k = tri.index(v)
        x, y = tri[(k + 1) % 3], tri[(k + 2) % 3]
        if stop(x, y):
            return out
        nxt = mesh.directed_face.get((v, y) if forward else (x, v))
        if nxt is None or not in_seg[nxt] or nxt in out:
            return out
        fi = nxt
    raise NoPath(f"could not walk the fan of vertex {v}")


def _straighten(mesh, path):
    out = list(path)
    i = 1
    while i < len(out) - 1:
        if out[i + 1] in set(mesh.neighbors[out[i - 1]].tolist()):
            del out[i]
        else:
            i += 1
    return out


def cut_endpoints(mesh, segment, f, interior):
    """Start vertex and candidate end vertices of the cut.

    Boundary candidates must touch an interior vertex so that the cut can
    leave the boundary immediately.
    """
    def usable(loop):
        return np.array([v for v in loop.tolist() if interior[mesh.neighbors[v]].any()], dtype=np.int64)

    loops = [lp for lp in (usable(lp) for lp in segment.boundary_loops) if len(lp)]
    if segment.interior_max >= 0:
        start = segment.interior_max
        start_loop = -1
    elif loops:
        start_loop = max(range(len(loops)), key=lambda i: f[loops[i]].max())
        start = int(loops[start_loop][np.argmax(f[loops[start_loop]])])
    else:
        raise NoPath(f"segment {segment.id}: no start point for the cut")
    # the cut must cross every isoline, so it ends at the minimum when there is one
    if segment.interior_min >= 0:
        return start, np.array([segment.interior_min])
    others = [lp for i, lp in enumerate(loops) if i != start_loop]
    if not others:
        raise NoPath(f"segment {segment.id}: no end point for the cut")
    return start, np.concatenate(others)


def cut_segment(mesh, segment, f):
    """Open ``segment`` along a shortest edge path into a disk."""
    f = np.asarray(f, dtype=float)
    fids = np.asarray(segment.faces)
    in_seg = np.zeros(mesh.n_faces, dtype=bool)
    in_seg[fids] = True
    seg_verts = np.unique(mesh.faces[fids])
    bverts = set(np.concatenate(segment.boundary_loops).tolist()) if segment.boundary_loops else set()
    allowed = np.zeros(mesh.n_vertices, dtype=bool)
    allowed[seg_verts] = True
    allowed[list(bverts)] = False
    start, targets = cut_endpoints(mesh, segment, f, allowed.copy())
    allowed[start] = True
    allowed[targets] = True

    e = mesh.edges
    ok = allowed[e[:, 0]] & allowed[e[:, 1]]
    # boundary-to-boundary edges are never part of the cut
    ok &= ~(np.isin(e[:, 0], list(bverts)) & np.isin(e[:, 1], list(bverts)))
    length = np.linalg.norm(mesh.vertices[e[ok, 0]] - mesh.vertices[e[ok, 1]], axis=1)
    n = mesh.n_vertices
    graph = sparse.coo_matrix((length, (e[ok, 0], e[ok, 1])), shape=(n, n)).tocsr()
    dist, pred = dijkstra(graph, directed=False, indices=start, return_predecessors=True)
    reach = targets[np.isfinite(dist[targets])]
    if len(reach) == 0:
        raise NoPath(f"segment {segment.id}: cut end unreachable from vertex {start}")
    end = int(reach[np.argmin(dist[reach])])
    path = [end]
    while path[-1] != start:
        path.append(int(pred[path[-1]]))
    path = _straighten(mesh, path[::-1])
    if f[path[0]] > f[path[-1]]:
        path = path[::-1]

    local = -np.ones(n, dtype=np.int64)
    local[seg_verts] = np.arange(len(seg_verts))
    cut_faces = local[mesh.faces[fids]]
    to_mesh = list(seg_verts)
    face_pos = {int(fi): k for k, fi in enumerate(fids)}
    # g = 0 on the copies left of the path, where J grad f points into the disk
    boundary = local[np.array(path)]

    for i, v in enumerate(path):
        prev = path[i - 1] if i > 0 else None
        nxt = path[i + 1] if i + 1 < len(path) else None
        on_boundary = v in bverts
        if (prev is None or nxt is None) and not on_boundary:
            continue  # interior end point (seed or maximum) stays whole
        if nxt is not None:
            f0 = mesh.directed_face.get((v, nxt))
            stop = (lambda x, y, p=prev: y == p) if prev is not None else (lambda x, y: False)
            left = _walk(mesh, in_seg, v, f0, stop, forward=True)
        else:
            f0 = mesh.directed_face.get((prev, v))
            left = _walk(mesh, in_seg, v, f0, lambda x, y: False, forward=False)
        new_id = len(to_mesh)
        to_mesh.append(v)
        boundary[i] = new_id
        for fi in left:
            row = cut_faces[face_pos[fi]]
            row[row == local[v]] = new_id

    to_mesh = np.array(to_mesh, dtype=np.int64)
    return CutSegment(
        segment=segment,
        path=np.array(path, dtype=np.int64),
        vertices=mesh.vertices[to_mesh],
        faces=cut_faces,
        mesh_faces=fids,
        to_mesh=to_mesh,
        boundary=boundary,
    )


def column_speed(k, alpha=ALPHA):
    """Target isoline speed for normal curvature ``k`` along the isoline."""
    return np.tanh(-np.asarray(k, dtype=float) / alpha) / 2 + 1


def isoline_tangents(vertices, faces, f):
    """Unit rotated gradient n x grad f per face."""
    grads = np.einsum("fkd,fk->fd", hat_gradients(vertices, faces), f[faces])
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    n = np.cross(b - a, c - a)
    n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)
    t = np.cross(n, grads)
    return t / np.maximum(np.linalg.norm(t, axis=1, keepdims=True), 1e-300), grads


def curvature_target(mesh, face_ids, f, curv, adaptive=True):
    """Per-face isoline speed; adapted only where mean and Gaussian are negative.

    The normal curvature fed to the speed law is measured against the outward
    normal, so a direction that bends like a sphere has negative curvature.
    """
    face_ids = np.asarray(face_ids)
    target = np.ones(len(face_ids))
    if not adaptive or curv is None:
        return target
    tri = mesh.faces[face_ids]
    mean = curv.mean[tri].mean(axis=1)
    gauss = curv.gaussian[tri].mean(axis=1)
    adapt = (mean < 0) & (gauss < 0)
    if not adapt.any():
        return target
    tangent, _ = isoline_tangents(mesh.vertices, tri, np.asarray(f, dtype=float))
    tensor = curv.shape_tensor[tri].mean(axis=1)
    k_convex = np.einsum("fi,fij,fj->f", tangent, tensor, tangent)
    target[adapt] = column_speed(-k_convex[adapt])
    return target


def solve_column_function(cut, f, target=None, reg=REGULARIZER):
    """Least-squares g on the cut mesh; returns (g, residual).

    ``f`` holds values on the cut-mesh vertices.
    """
    V, F = cut.vertices, cut.faces
    f = np.asarray(f, dtype=float)
    nf, nv = len(F), len(V)
    if target is None:
        target = np.ones(nf)
    basis = hat_gradients(V, F)
    tangent, grads = isoline_tangents(V, F, f)
    gnorm = grads / np.maximum(np.linalg.norm(grads, axis=1, keepdims=True), 1e-300)
    area = 0.5 * np.linalg.norm(
        np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]]), axis=1
    )
    sw = np.sqrt(area)
    a_rows = np.einsum("fd,fkd->fk", tangent, basis) * sw[:, None]
    r_rows = np.einsum("fd,fkd->fk", gnorm, basis) * (np.sqrt(reg) * sw)[:, None]
    rows = np.concatenate([np.repeat(np.arange(nf), 3), np.repeat(np.arange(nf, 2 * nf), 3)])
    cols = np.concatenate([F.ravel(), F.ravel()])
    vals = np.concatenate([a_rows.ravel(), r_rows.ravel()])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * nf, nv))
    rhs = np.concatenate([sw * target, np.zeros(nf)])

    free = np.ones(nv, dtype=bool)
    free[cut.boundary] = False
    Af = A[:, free]
    N = (Af.T @ Af).tocsc()
    try:
        sol = splinalg.spsolve(N, Af.T @ rhs)
    except RuntimeError as exc:
        raise SolverFailure(str(exc)) from exc
    g = np.zeros(nv)
    g[free] = sol
    if not np.all(np.isfinite(g)):
        raise SolverFailure("column function solve produced non-finite values")
    res = A @ g - rhs
    return g, float(res[:nf] @ res[:nf])
