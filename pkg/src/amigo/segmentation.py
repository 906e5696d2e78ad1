"""Isoline extraction and saddle slicing into a segment DAG."""

import heapq
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geodesic import perturb_ties

NUDGE = 1e-12


@dataclass
class IsolineLoop:
    """Polyline of a level set; point k lies on mesh edge ``edges[k]``.

    ``lam[k]`` is the barycentric coordinate toward ``edges[k][1]`` and
    ``faces[k]`` is the face crossed between point k and point k + 1.
    Loops run along the rotated gradient (higher values on the right).
    """

    edges: np.ndarray
    lam: np.ndarray
    faces: np.ndarray
    points: np.ndarray
    closed: bool = True

    def __len__(self):
        return len(self.points)

    @property
    def segment_lengths(self):
        nxt = np.roll(self.points, -1, axis=0) if self.closed else self.points[1:]
        cur = self.points if self.closed else self.points[:-1]
        return np.linalg.norm(nxt - cur, axis=1)

    @property
    def length(self):
        return float(self.segment_lengths.sum())


def _safe_level(values, level):
    # move the level off any vertex value so that crossings are transversal
    scale = max(1.0, float(np.abs(values).max()))
    while np.any(values == level):
        level = level + NUDGE * scale
    return level


def extract_isoline(mesh, values, level, face_mask=None):
    """All components of ``{values == level}`` as oriented polylines."""
    values = np.asarray(values, dtype=float)
    level = _safe_level(values, level)
    above = values > level
    faces = mesh.faces
    fa = above[faces]
    crossing = fa.any(axis=1) & ~fa.all(axis=1)
    if face_mask is not None:
        crossing &= face_mask
    fids = np.flatnonzero(crossing)
    if len(fids) == 0:
        return []
    grads = mesh.face_gradient(values)
    normals = mesh.face_normals

    point_of = {}
    pts, pedges, plam = [], [], []

    def point(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in point_of:
            u, v = key
            lam = (level - values[u]) / (values[v] - values[u])
            point_of[key] = len(pts)
            pts.append((1 - lam) * mesh.vertices[u] + lam * mesh.vertices[v])
            pedges.append(key)
            plam.append(lam)
        return point_of[key]

    nxt = {}
    via = {}
    for fi in fids.tolist():
        tri = faces[fi]
        ends = []
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            if above[a] != above[b]:
                ends.append(point(a, b))
        p, q = ends
        d = pts[q] - pts[p]
        if np.dot(np.cross(normals[fi], d), grads[fi]) > 0:
            p, q = q, p
        nxt[p] = q
        via[p] = fi

    pts = np.array(pts)
    pedges = np.array(pedges, dtype=np.int64)
    plam = np.array(plam)
    prev = {q: p for p, q in nxt.items()}
    seen = set()
    loops = []
    # open chains (only with a face mask) start where no predecessor exists
    starts = sorted(p for p in nxt if p not in prev) + sorted(nxt)
    for s in starts:
        if s in seen:
            continue
        chain = [s]
        seen.add(s)
        cur = s
        closed = False
        while cur in nxt:
            cur = nxt[cur]
            if cur == s:
                closed = True
                break
            if cur in seen:
                break
            chain.append(cur)
            seen.add(cur)
        chain = np.array(chain)
        fl = np.array([via.get(int(p), -1) for p in chain])
        loops.append(IsolineLoop(pedges[chain], plam[chain], fl, pts[chain], closed))
    return loops


def loop_face_labels(loop, labels):
    """Majority label of the faces a loop crosses."""
    fl = loop.faces[loop.faces >= 0]
    vals, counts = np.unique(labels[fl], return_counts=True)
    return int(vals[np.argmax(counts)])


@dataclass
class Segment:
    id: int
    faces: np.ndarray
    band: int
    f_lo: float
    f_hi: float
    boundary_loops: list = field(default_factory=list)  # vertex-id arrays
    parents: list = field(default_factory=list)
    children: list = field(default_factory=list)
    skipped: bool = False
    interior_max: int = -1
    interior_min: int = -1

    @property
    def extent(self):
        return self.f_hi - self.f_lo


@dataclass
class SegmentDag:
    segments: list
    edges: list
    order: list
    face_labels: np.ndarray
    slice_values: list

    def __len__(self):
        return len(self.segments)

    def active(self):
        return [self.segments[s] for s in self.order if not self.segments[s].skipped]


def topological_order(n, edges):
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for s, t in edges:
        out[s].append(t)
        indeg[t] += 1
    heap = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        s = heapq.heappop(heap)
        order.append(s)
        for t in sorted(out[s]):
            indeg[t] -= 1
            if indeg[t] == 0:
                heapq.heappush(heap, t)
    if len(order) != n:
        raise ValueError("segment graph has a cycle")
    return order


def _boundary_loops(mesh, face_ids):
    """Connected components of the boundary edges of a face subset."""
    count = {}
    for fi in face_ids.tolist():
        a, b, c = mesh.faces[fi].tolist()
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            count[key] = count.get(key, 0) + 1
    bedges = np.array([k for k, c in count.items() if c == 1], dtype=np.int64).reshape(-1, 2)
    if len(bedges) == 0:
        return []
    verts, inv = np.unique(bedges, return_inverse=True)
    inv = inv.reshape(-1, 2)
    g = coo_matrix(
        (np.ones(len(inv)), (inv[:, 0], inv[:, 1])), shape=(len(verts), len(verts))
    )
    ncomp, lab = connected_components(g, directed=False)
    return [verts[lab == c] for c in range(ncomp)]


def segment_at_saddles(mesh, values, criticals):
    """Slice at every saddle value and split each band into components.

    Faces are assigned to the band containing their centroid value, so
    segments partition the faces without remeshing.
    """
    # same tie-breaking as the critical point classifier
    f = perturb_ties(np.asarray(values, dtype=float))
    slices = sorted({float(f[s]) for s in criticals.saddles})
    fc = f[mesh.faces].mean(axis=1)
    band = np.searchsorted(np.array(slices), fc, side="right") if slices else np.zeros(
        mesh.n_faces, dtype=np.int64
    )

    # connectivity runs over vertices of equal band; saddle vertices are
    # left out so that sectors touching only at a saddle stay apart
    vband = np.searchsorted(np.array(slices), f, side="right") if slices else np.zeros(
        mesh.n_vertices, dtype=np.int64
    )
    is_saddle = np.zeros(mesh.n_vertices, dtype=bool)
    is_saddle[list(criticals.saddles)] = True
    e = mesh.edges
    keep = (vband[e[:, 0]] == vband[e[:, 1]]) & ~is_saddle[e[:, 0]] & ~is_saddle[e[:, 1]]
    g = coo_matrix(
        (np.ones(int(keep.sum())), (e[keep, 0], e[keep, 1])),
        shape=(mesh.n_vertices, mesh.n_vertices),
    )
    _, vcomp = connected_components(g, directed=False)
    comp = np.empty(mesh.n_faces, dtype=np.int64)
    for fi, tri in enumerate(mesh.faces.tolist()):
        cand = [v for v in tri if vband[v] == band[fi] and not is_saddle[v]]
        if not cand:
            cand = [v for v in tri if not is_saddle[v]]
        comp[fi] = vcomp[min(cand)]
    uniq, comp = np.unique(comp, return_inverse=True)
    ncomp = len(uniq)

    # deterministic ids: by band, then lowest field value, then lowest face id
    keys = []
    for c in range(ncomp):
        fids = np.flatnonzero(comp == c)
        keys.append((int(band[fids[0]]), float(fc[fids].min()), int(fids[0]), c))
    keys.sort()
    remap = np.empty(ncomp, dtype=np.int64)
    for new, k in enumerate(keys):
        remap[k[3]] = new
    labels = remap[comp]

    adj = mesh.face_adjacency
    pairs = set()
    for a, b in adj.tolist():
        la, lb = int(labels[a]), int(labels[b])
        if la == lb:
            continue
        if band[a] == band[b]:
            continue
        if band[a] > band[b]:
            la, lb = lb, la
        pairs.add((la, lb))
    edges = sorted(pairs)

    maxima = set(criticals.maxima)
    minima = set(criticals.minima)
    segments = []
    for sid in range(ncomp):
        fids = np.flatnonzero(labels == sid)
        b = int(band[fids[0]])
        verts = np.unique(mesh.faces[fids])
        loops = _boundary_loops(mesh, fids)
        bverts = set(np.concatenate(loops).tolist()) if loops else set()
        inner = [v for v in verts.tolist() if v not in bverts]
        imax = [v for v in inner if v in maxima]
        imin = [v for v in inner if v in minima]
        f_lo = slices[b - 1] if b > 0 else float(f[verts].min())
        f_hi = min(slices[b], float(f[verts].max())) if b < len(slices) else float(f[verts].max())
        segments.append(
            Segment(
                id=sid,
                faces=fids,
                band=b,
                f_lo=f_lo,
                f_hi=f_hi,
                boundary_loops=loops,
                parents=sorted(s for s, t in edges if t == sid),
                children=sorted(t for s, t in edges if s == sid),
                interior_max=max(imax, key=lambda v: f[v]) if imax else -1,
                interior_min=min(imin, key=lambda v: f[v]) if imin else -1,
            )
        )
    order = topological_order(ncomp, edges)
    return SegmentDag(segments, edges, order, labels, slices)


def filter_thin_segments(dag, stitch_width):
    """Mark segments thinner than one stitch, and their orphans, as skipped."""
    segs = [replace(s, parents=list(s.parents), children=list(s.children)) for s in dag.segments]
    for s in segs:
        s.skipped = s.extent < stitch_width
    for sid in dag.order:
        s = segs[sid]
        if s.skipped or not s.parents:
            continue
        if all(segs[p].skipped for p in s.parents):
            s.skipped = True
            warnings.warn(
                f"segment {sid} is only reachable through skipped segments; skipping it",
                RuntimeWarning,
            )
    return SegmentDag(segs, list(dag.edges), list(dag.order), dag.face_labels, dag.slice_values)
