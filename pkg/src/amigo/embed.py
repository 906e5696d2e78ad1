"""Predicted shape of the finished piece by local-global constraint projection.

Energy::

    E(Z) = sum_e w_len |z_a - z_b - p_e|^2 + w_s sum_i |C_i Z_i - q_i|^2

``p_e`` is the current edge vector rescaled to the stitch width.  ``Z_i`` is
the 1-ring of vertex i (the vertex and its graph neighbours), ``C_i`` removes
its centroid and ``q_i`` is the closest rotated and uniformly scaled copy of
the same 1-ring in the initial positions.  Both projections are exact, so
the energy never increases.  The seed vertex is eliminated from the unknowns.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import Diverged

LENGTH_WEIGHT = 1.0
SMOOTH_WEIGHT = 0.1
TOLERANCE = 1e-6
MAX_ITERATIONS = 1000


@dataclass
class EmbeddingState:
    positions: np.ndarray
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list)  # energy after every iteration
    seed: int = 0

    @property
    def residual(self):
        return self.residuals[-1] if self.residuals else 0.0


def graph_edges(graph):
    """Unique undirected (row + wrap + column) edges of the graph."""
    e = np.concatenate([graph.row_edges()[:, :2], graph.column_edges()[:, :2]])
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    return np.unique(e, axis=0)


def _incidence(edges, n):
    m = len(edges)
    rows = np.repeat(np.arange(m), 2)
    vals = np.tile([1.0, -1.0], m)
    return sparse.csr_matrix((vals, (rows, edges.ravel())), shape=(m, n))


class _Rings:
    """Stacked centred 1-rings: ``matrix @ Z`` gives every ring minus its centroid."""

    def __init__(self, edges, n, rest):
        adj = sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
        adj = (adj + adj.T).tocsr()
        rows, cols, vals, owner = [], [], [], []
        start = 0
        for i in range(n):
            ring = np.concatenate([[i], adj.indices[adj.indptr[i] : adj.indptr[i + 1]]])
            k = len(ring)
            if k < 2:
                continue
            block = np.eye(k) - 1.0 / k
            r, c = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
            rows.append(start + r.ravel())
            cols.append(ring[c.ravel()])
            vals.append(block.ravel())
            owner.append(np.full(k, len(owner)))
            start += k
        self.n_rings = len(owner)
        self.owner = np.concatenate(owner) if owner else np.zeros(0, dtype=np.int64)
        self.matrix = sparse.csr_matrix(
            (np.concatenate(vals) if vals else [], (np.concatenate(rows) if rows else [], np.concatenate(cols) if cols else [])),
            shape=(start, n),
        )
        self.rest = self.matrix @ rest
        self.starts = np.flatnonzero(np.r_[True, np.diff(self.owner) != 0]) if len(self.owner) else self.owner
        self.rest_norm = np.add.reduceat(np.sum(self.rest**2, axis=1), self.starts) if len(self.owner) else np.zeros(0)

    def project(self, Z):
        """Closest similarity copy of each rest ring to the current ring."""
        cur = self.matrix @ Z
        P = self.rest
        if not self.n_rings:
            return cur
        M = np.add.reduceat((P[:, :, None] * cur[:, None, :]).reshape(-1, 9), self.starts).reshape(-1, 3, 3)
        U, S, Vt = np.linalg.svd(M)
        d = np.sign(np.linalg.det(U @ Vt))
        d[d == 0] = 1.0
        U[:, :, 2] *= d[:, None]
        S[:, 2] *= d
        R = U @ Vt
        norm = self.rest_norm
        scale = np.where(norm > 1e-300, S.sum(axis=1) / np.maximum(norm, 1e-300), 0.0)
        scale = np.maximum(scale, 0.0)
        return scale[self.owner, None] * np.einsum("kd,kde->ke", P, R[self.owner])


def _project(D, Z, w):
    d = D @ Z
    norm = np.linalg.norm(d, axis=1, keepdims=True)
    # a collapsed edge keeps its (zero) direction; any direction is optimal
    return np.where(norm > 1e-300, d * (w / np.maximum(norm, 1e-300)), 0.0)


def _energy(D, rings, Z, Q, w, wl, ws):
    stretch = np.linalg.norm(D @ Z, axis=1) - w
    bend = rings.matrix @ Z - Q
    return float(wl * stretch @ stretch + ws * np.sum(bend * bend))


def embed_graph(
    graph,
    w=None,
    seed_position=None,
    init=None,
    length_weight=LENGTH_WEIGHT,
    smooth_weight=SMOOTH_WEIGHT,
    tol=TOLERANCE,
    max_iter=MAX_ITERATIONS,
):
    """Run local-global iterations from ``init`` (the sampled positions)."""
    w = graph.stitch_width if w is None else float(w)
    Z = np.array(graph.positions if init is None else init, dtype=float)
    n = len(Z)
    seed = int(graph.seed)
    if seed_position is not None:
        Z[seed] = seed_position
    edges = graph_edges(graph)
    D = _incidence(edges, n)
    rings = _Rings(edges, n, np.array(graph.positions if init is None else init, dtype=float))
    S = rings.matrix
    A = (length_weight * (D.T @ D) + smooth_weight * (S.T @ S)).tocsc()

    free = np.ones(n, dtype=bool)
    free[seed] = False
    # vertices not reached by any edge stay where they are
    touched = np.zeros(n, dtype=bool)
    touched[edges.ravel()] = True
    free &= touched
    Aff = A[free][:, free].tocsc()
    Afc = A[free][:, ~free]
    solve = splinalg.factorized(Aff)
    fixed_rhs = Afc @ Z[~free]

    # Q is the ring projection of the current Z; it serves both the energy
    # report and the next local step
    Q = rings.project(Z)
    residuals = [_energy(D, rings, Z, Q, w, length_weight, smooth_weight)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        P = _project(D, Z, w)
        rhs = (length_weight * (D.T @ P) + smooth_weight * (S.T @ Q))[free] - fixed_rhs
        new = np.column_stack([solve(rhs[:, k]) for k in range(3)])
        if not np.all(np.isfinite(new)):
            raise Diverged(f"non-finite positions at iteration {it}")
        change = np.abs(new - Z[free]).max() if len(new) else 0.0
        Z[free] = new
        Q = rings.project(Z)
        residuals.append(_energy(D, rings, Z, Q, w, length_weight, smooth_weight))
        if change < tol * w:
            converged = True
            break
    return EmbeddingState(positions=Z, iterations=it, converged=converged, residuals=residuals, seed=seed)


def coupling_cells(graph):
    """Polygons (3 or 4 corners) between consecutive column edges of each row."""
    cells = []
    for s in graph.order():
        for r, pairs in enumerate(s.couplings):
            if pairs is None or len(pairs) < 2:
                continue
            prev, cur = np.asarray(s.previous(r)), np.asarray(s.rows[r])
            k = len(pairs)
            closed = len(cur) >= 3
            for i in range(k if closed else k - 1):
                (a1, b1), (a2, b2) = pairs[i], pairs[(i + 1) % k]
                poly = [int(prev[a1]), int(prev[a2]), int(cur[b2]), int(cur[b1])]
                out = []
                for v in poly:
                    if v not in out:
                        out.append(v)
                if len(out) >= 3:
                    cells.append(out)
    return cells


def export_embedding(state, graph, path, surface=True, ply_path=None):
    """Write the embedding as OBJ: vertices, edge lines and optional faces."""
    Z = state.positions
    lines = [f"# crochet graph embedding {graph.name}".rstrip(), f"# vertices {len(Z)}"]
    lines += [f"v {x:.9f} {y:.9f} {z:.9f}" for x, y, z in Z]
    for a, b in graph_edges(graph).tolist():
        lines.append(f"l {a + 1} {b + 1}")
    if surface:
        for poly in coupling_cells(graph):
            lines.append("f " + " ".join(str(v + 1) for v in poly))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if ply_path is not None:
        export_ply(state, graph, ply_path)


def segment_colors(seg):
    """Deterministic RGB colour per segment id."""
    seg = np.asarray(seg)
    hue = (seg * 0.618033988749895) % 1.0
    h6 = hue * 6
    x = 1 - np.abs(h6 % 2 - 1)
    c = np.zeros((len(seg), 3))
    idx = h6.astype(int) % 6
    table = [(1, 0), (0, 1), (2, 0), (1, 2), (0, 2), (2, 1)]  # (full channel, partial channel)
    for k, (full, part) in enumerate(table):
        sel = idx == k
        c[sel, full] = 1.0
        c[sel, part] = x[sel]
    return (55 + 200 * c).astype(int)


def export_ply(state, graph, path):
    """ASCII PLY with per-vertex segment colours and the graph edges."""
    Z = state.positions
    edges = graph_edges(graph)
    cols = segment_colors(graph.seg)
    out = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(Z)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        f"element edge {len(edges)}",
        "property int vertex1",
        "property int vertex2",
        "end_header",
    ]
    out += [f"{p[0]:.9f} {p[1]:.9f} {p[2]:.9f} {c[0]} {c[1]} {c[2]}" for p, c in zip(Z, cols)]
    out += [f"{a} {b}" for a, b in edges.tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
