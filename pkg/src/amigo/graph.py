"""Crochet graph: sampled rows, DTW couplings and inter-segment joins.

Vertices carry a global id; each segment stores its rows as arrays of ids
and, for every row, the coupling to the previous row as (base, top) index
pairs local to the two rows.  The previous row of a root segment's row 0
does not exist; for every other segment it is the joint row assembled from
the parents' last rows.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyJointRow, EmptyRow
from .segmentation import extract_isoline

MIN_RING = 3
APEX_RANGE = 1.5
APEX_MARGIN = 0.3
LEVEL_GAP = 0.02
JOINT_RADIUS = 1.5
EDGE_TOL = 0.15

NORMAL, BLO, FLO = 0, 1, 2
MODIFIER_NAMES = {NORMAL: "", BLO: "BLO", FLO: "FLO"}


@dataclass
class GraphSegment:
    id: int
    parents: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # arrays of global vertex ids
    couplings: list = field(default_factory=list)  # (k, 2) int arrays or None
    modifiers: list = field(default_factory=list)  # (k,) int arrays or None
    levels: list = field(default_factory=list)
    joint_row: np.ndarray = None
    provenance: list = field(default_factory=list)  # (parent, index) per joint vertex
    skipped_spans: dict = field(default_factory=dict)  # parent -> unused indices
    skipped: bool = False

    @property
    def is_root(self):
        return not self.parents

    def previous(self, r):
        """Vertex ids of the row that row ``r`` is worked into."""
        if r > 0:
            return self.rows[r - 1]
        return self.joint_row


@dataclass(eq=False)
class CrochetGraph:
    positions: np.ndarray
    faces: np.ndarray
    bary: np.ndarray
    seg: np.ndarray
    row: np.ndarray
    col: np.ndarray
    segments: list
    stitch_width: float
    seed: int = 0
    name: str = ""
    notes: list = field(default_factory=list)

    @property
    def n_vertices(self):
        return len(self.positions)

    def active(self):
        return [s for s in self.segments if not s.skipped and s.rows]

    def order(self):
        """Segments in crochet order (parents before children, then by id)."""
        done, out = set(), []
        pending = [s for s in self.active()]
        while pending:
            for s in pending:
                if all(p in done for p in s.parents):
                    out.append(s)
                    done.add(s.id)
                    pending.remove(s)
                    break
            else:
                raise ValueError("segment parents form a cycle")
        return out

    def row_edges(self):
        """(E, 3) array of (a, b, wrap) including each ring's closing pair."""
        out = []
        for s in self.active():
            for ids in s.rows:
                n = len(ids)
                out += [(int(ids[j]), int(ids[j + 1]), 0) for j in range(n - 1)]
                if n >= MIN_RING:
                    out.append((int(ids[-1]), int(ids[0]), 1))
        return np.array(out, dtype=np.int64).reshape(-1, 3)

    def column_edges(self):
        """(C, 3) array of (base, top, modifier) in crochet order."""
        out = []
        for s in self.order():
            for r, pairs in enumerate(s.couplings):
                if pairs is None:
                    continue
                prev, cur = s.previous(r), s.rows[r]
                mods = s.modifiers[r]
                for (a, b), m in zip(pairs.tolist(), mods.tolist()):
                    out.append((int(prev[a]), int(cur[b]), int(m)))
        return np.array(out, dtype=np.int64).reshape(-1, 3)

    def rounds(self):
        """Stitch counts of every worked row in crochet order."""
        return [len(ids) for s in self.order() for r, ids in enumerate(s.rows) if s.couplings[r] is not None]

    def stats(self):
        counts = self.rounds()
        return {
            "model": self.name,
            "stitch_width": self.stitch_width,
            "rows": len(counts),
            "segments": len(self.active()),
            "stitches": int(sum(counts)),
            "vertices": int(self.n_vertices),
        }

    # serialization
    def to_json(self):
        def r(x):
            return [round(float(v), 12) for v in x]

        doc = {
            "format": "amigo-crochet-graph",
            "version": 1,
            "model": self.name,
            "stitch_width": self.stitch_width,
            "seed": int(self.seed),
            "vertices": [
                {
                    "id": i,
                    "segment": int(self.seg[i]),
                    "row": int(self.row[i]),
                    "col": int(self.col[i]),
                    "position": r(self.positions[i]),
                    "face": int(self.faces[i]),
                    "bary": r(self.bary[i]),
                }
                for i in range(self.n_vertices)
            ],
            "segments": [
                {
                    "id": s.id,
                    "parents": list(s.parents),
                    "skipped": bool(s.skipped),
                    "levels": r(s.levels),
                    "rows": [ids.tolist() for ids in s.rows],
                    "couplings": [None if c is None else c.tolist() for c in s.couplings],
                    "modifiers": [None if m is None else m.tolist() for m in s.modifiers],
                    "joint_row": None if s.joint_row is None else s.joint_row.tolist(),
                    "joint_provenance": [list(p) for p in s.provenance],
                    "skipped_spans": {str(k): list(v) for k, v in sorted(s.skipped_spans.items())},
                }
                for s in self.segments
            ],
            "row_edges": self.row_edges().tolist(),
            "column_edges": self.column_edges().tolist(),
            "annotations": {
                "modifier_codes": {"0": "both loops", "1": "BLO", "2": "FLO"},
                "notes": list(self.notes),
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != "amigo-crochet-graph":
            raise ValueError("not a crochet graph document")
        vs = doc["vertices"]
        segs = []
        for d in doc["segments"]:
            segs.append(
                GraphSegment(
                    id=d["id"],
                    parents=list(d["parents"]),
                    rows=[np.array(r, dtype=np.int64) for r in d["rows"]],
                    couplings=[
                        None if c is None else np.array(c, dtype=np.int64).reshape(-1, 2)
                        for c in d["couplings"]
                    ],
                    modifiers=[
                        None if m is None else np.array(m, dtype=np.int64) for m in d["modifiers"]
                    ],
                    levels=list(d.get("levels", [])),
                    joint_row=None if d["joint_row"] is None else np.array(d["joint_row"], dtype=np.int64),
                    provenance=[tuple(p) for p in d["joint_provenance"]],
                    skipped_spans={int(k): list(v) for k, v in d.get("skipped_spans", {}).items()},
                    skipped=d["skipped"],
                )
            )
        return cls(
            positions=np.array([v["position"] for v in vs], dtype=float).reshape(-1, 3),
            faces=np.array([v["face"] for v in vs], dtype=np.int64),
            bary=np.array([v["bary"] for v in vs], dtype=float).reshape(-1, 3),
            seg=np.array([v["segment"] for v in vs], dtype=np.int64),
            row=np.array([v["row"] for v in vs], dtype=np.int64),
            col=np.array([v["col"] for v in vs], dtype=np.int64),
            segments=segs,
            stitch_width=float(doc["stitch_width"]),
            seed=int(doc["seed"]),
            name=doc.get("model", ""),
            notes=list(doc.get("annotations", {}).get("notes", [])),
        )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


# ---------------------------------------------------------------- DTW


def dtw_couple(a, b, breaks=None):
    """Minimal-cost monotone coupling of two point sequences.

    Returns ``(pairs, cost)`` with pairs an (k, 2) array of indices.  Ties
    prefer the diagonal step, then advancing ``b``.  ``breaks[s]`` forbids
    merging ``a[s]`` and ``a[s + 1]`` into one top (a decrease).
    """
    a = np.asarray(a, dtype=float).reshape(len(a), -1)
    b = np.asarray(b, dtype=float).reshape(len(b), -1)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("cannot couple an empty row")
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    inf = np.inf
    D = np.full((n, m), inf)
    D[0, 0] = cost[0, 0]
    for j in range(1, m):
        D[0, j] = D[0, j - 1] + cost[0, j]
    for i in range(1, n):
        down_ok = breaks is None or not breaks[i - 1]
        prev = D[i - 1]
        row = D[i]
        c = cost[i]
        row[0] = prev[0] + c[0] if down_ok else inf
        for j in range(1, m):
            best = prev[j - 1]
            if row[j - 1] < best:
                best = row[j - 1]
            if down_ok and prev[j] < best:
                best = prev[j]
            row[j] = best + c[j]
    if not np.isfinite(D[n - 1, m - 1]):
        raise ValueError("no coupling respects the row breaks")
    i, j = n - 1, m - 1
    path = [(i, j)]
    while i or j:
        down_ok = i > 0 and (breaks is None or not breaks[i - 1])
        cands = []
        if i and j:
            cands.append((D[i - 1, j - 1], 0, i - 1, j - 1))
        if j:
            cands.append((D[i, j - 1], 1, i, j - 1))
        if down_ok:
            cands.append((D[i - 1, j], 2, i - 1, j))
        _, _, i, j = min(cands)
        path.append((i, j))
    pairs = np.array(path[::-1], dtype=np.int64)
    return pairs, float(D[n - 1, m - 1])


def coupling_cost(a, b, pairs):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a[pairs[:, 0]] - b[pairs[:, 1]], axis=-1).sum())


# ---------------------------------------------------------------- sampling


def _barycentric(p, tri):
    a, b, c = tri
    v0, v1, v2 = b - a, c - a, p - a
    d00, d01, d11 = v0 @ v0, v0 @ v1, v1 @ v1
    d20, d21 = v2 @ v0, v2 @ v1
    den = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    return np.array([1 - v - w, v, w])


class _RowSample:
    __slots__ = ("positions", "faces", "bary", "level", "range")

    def __init__(self, positions, faces, bary, level, rng):
        self.positions = positions
        self.faces = faces
        self.bary = bary
        self.level = level
        self.range = rng


def _loop_g(mesh, loop, cut, g, face_pos, arc_target=None):
    """Per-step g increments along a loop, computed face by face.

    With ``arc_target`` the increments are target-weighted arc length
    instead, for cut segments that did not open into a disk.
    """
    cf = cut.faces
    k = len(loop)
    inc = np.empty(k)
    start_g = np.full(k, np.inf)
    for i in range(k):
        fi = int(loop.faces[i])
        j = (i + 1) % k
        pos = face_pos.get(fi)
        if pos is None:
            inc[i] = np.linalg.norm(loop.points[j] - loop.points[i])
            continue
        corner = dict(zip(mesh.faces[fi].tolist(), cf[pos].tolist()))

        def at(p):
            u, v = loop.edges[p]
            lam = loop.lam[p]
            return (1 - lam) * g[corner[int(u)]] + lam * g[corner[int(v)]]

        ga, gb = at(i), at(j)
        if arc_target is None:
            inc[i] = gb - ga
        else:
            inc[i] = arc_target[pos] * np.linalg.norm(loop.points[j] - loop.points[i])
        start_g[i] = ga
    return inc, start_g


def _sample_loop(mesh, loop, cut, g, face_pos, w, level, arc_target=None):
    inc, start_g = _loop_g(mesh, loop, cut, g, face_pos, arc_target)
    cut_edges = cut.cut_edges
    on_cut = [i for i in range(len(loop)) if tuple(sorted(map(int, loop.edges[i]))) in cut_edges]
    if on_cut:
        k0 = min(on_cut, key=lambda i: (start_g[i], i))
    else:
        k0 = int(np.argmin(start_g))
    order = np.roll(np.arange(len(loop)), -k0)
    steps = inc[order]
    total = float(steps.sum())
    if total <= 0:
        raise EmptyRow(f"column function decreases along the isoline at f = {level:.6g}")
    s = np.maximum.accumulate(np.concatenate([[0.0], np.cumsum(steps)]))
    n = max(MIN_RING, int(round(total / w)))
    targets = np.arange(n) * (total / n)
    seg_idx = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, len(order) - 1)
    span = s[seg_idx + 1] - s[seg_idx]
    t = np.where(span > 0, (targets - s[seg_idx]) / np.where(span > 0, span, 1), 0.0)
    pts = loop.points
    a = pts[order[seg_idx]]
    b = pts[np.roll(order, -1)[seg_idx]]
    positions = a + t[:, None] * (b - a)
    faces = loop.faces[order[seg_idx]].astype(np.int64)
    bary = np.array(
        [_barycentric(p, mesh.vertices[mesh.faces[fi]]) for p, fi in zip(positions, faces)]
    )
    return _RowSample(positions, faces, bary, level, total)


def _point_sample(mesh, v, level):
    fi = int(mesh.vertex_faces[v][0])
    bary = (mesh.faces[fi] == v).astype(float)
    return _RowSample(mesh.vertices[v][None, :].copy(), np.array([fi]), bary[None, :], level, 0.0)


def segment_levels(seg, w, root):
    """Row levels inside a segment: global multiples of w, kept off the slices."""
    gap = LEVEL_GAP * w
    top = seg.f_hi - APEX_MARGIN * w if seg.interior_max >= 0 else seg.f_hi - gap
    k0 = int(np.floor(seg.f_lo / w)) + 1
    levels = []
    k = k0
    while k * w < top + gap:
        lev = k * w
        if not root:
            lev = max(lev, seg.f_lo + gap)
        lev = min(lev, top)
        if lev > seg.f_lo and (not levels or lev > levels[-1]):
            levels.append(lev)
        k += 1
    return levels


def sample_rows(mesh, dag, seg, cut, f, g, w, seed=None, target=None):
    """Rows of one segment as ``_RowSample`` objects (row 0 first)."""
    from .segmentation import loop_face_labels

    face_pos = {int(fi): k for k, fi in enumerate(cut.mesh_faces)}
    arc_target = None
    if not cut.is_disk:
        # g cannot be single-valued here; measure rows by weighted arc length
        arc_target = np.ones(len(cut.mesh_faces)) if target is None else np.asarray(target)
    rows = []
    root = seed is not None and seg.interior_min == seed
    if root:
        rows.append(_point_sample(mesh, seed, 0.0))
    leaf = seg.interior_max >= 0
    collapsed = False
    for level in segment_levels(seg, w, root):
        loops = [lp for lp in extract_isoline(mesh, f, level) if len(lp) >= 2]
        mine = [lp for lp in loops if loop_face_labels(lp, dag.face_labels) == seg.id]
        if not mine:
            raise EmptyRow(f"segment {seg.id}: no isoline at f = {level:.6g}")
        loop = max(mine, key=lambda lp: lp.length)
        sample = _sample_loop(mesh, loop, cut, g, face_pos, w, level, arc_target)
        if leaf and sample.range < APEX_RANGE * w:
            collapsed = True
            break
        rows.append(sample)
    if leaf:
        rows.append(_point_sample(mesh, seg.interior_max, float(f[seg.interior_max])))
    if not rows:
        raise EmptyRow(f"segment {seg.id}: no rows at stitch width {w:g}")
    return rows, collapsed


# ---------------------------------------------------------------- assembly


class GraphBuilder:
    """Accumulates rows into global vertex arrays."""

    def __init__(self):
        self.pos, self.faces, self.bary = [], [], []
        self.seg, self.row, self.col = [], [], []

    def add_row(self, sid, r, sample):
        start = len(self.seg)
        n = len(sample.positions)
        self.pos.append(sample.positions)
        self.faces.append(sample.faces)
        self.bary.append(sample.bary)
        self.seg += [sid] * n
        self.row += [r] * n
        self.col += list(range(n))
        return np.arange(start, start + n, dtype=np.int64)

    def arrays(self):
        return (
            np.concatenate(self.pos) if self.pos else np.zeros((0, 3)),
            np.concatenate(self.faces) if self.faces else np.zeros(0, dtype=np.int64),
            np.concatenate(self.bary) if self.bary else np.zeros((0, 3)),
            np.array(self.seg, dtype=np.int64),
            np.array(self.row, dtype=np.int64),
            np.array(self.col, dtype=np.int64),
        )


def couple_rows(positions, gseg):
    """DTW couplings between consecutive rows of one segment (row 0 excluded)."""
    for r in range(1, len(gseg.rows)):
        prev, cur = gseg.rows[r - 1], gseg.rows[r]
        pairs, _ = dtw_couple(positions[prev], positions[cur])
        gseg.couplings[r] = pairs
        gseg.modifiers[r] = np.zeros(len(pairs), dtype=np.int64)


def _polyline_param(points, query):
    """Arc-length parameter of the closest point on a closed polyline."""
    a = points
    b = np.roll(points, -1, axis=0)
    d = b - a
    seglen = np.linalg.norm(d, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)[:-1]])
    out = np.empty(len(query))
    for k, q in enumerate(query):
        t = np.clip(np.einsum("ij,ij->i", q - a, d) / np.maximum(seglen**2, 1e-300), 0, 1)
        dist = np.linalg.norm(a + t[:, None] * d - q, axis=1)
        i = int(np.argmin(dist))
        out[k] = cum[i] + t[i] * seglen[i]
    return out


def couple_segments(mesh, dag, graph_segs, positions, w):
    """Build joint rows for every child segment and couple them."""
    active = {s.id: s for s in graph_segs if not s.skipped and s.rows}
    children = [s for s in graph_segs if s.id in active and s.parents]
    if not children:
        return
    boundary_pts = {}
    for s in children:
        loops = dag.segments[s.id].boundary_loops
        verts = np.concatenate(loops) if loops else np.zeros(0, dtype=np.int64)
        boundary_pts[s.id] = mesh.vertices[verts]
    # each parent last-row vertex goes to the nearest child within reach
    claims = {s.id: [] for s in children}
    for pid in sorted({p for s in children for p in s.parents}):
        if pid not in active:
            continue
        last = active[pid].rows[-1]
        pts = positions[last]
        kids = [s.id for s in children if pid in s.parents]
        dists = np.stack(
            [cKDTree(boundary_pts[k]).query(pts)[0] if len(boundary_pts[k]) else np.full(len(pts), np.inf) for k in kids]
        )
        best = np.argmin(dists, axis=0)
        bestd = dists[best, np.arange(len(pts))]
        used = set()
        for idx in range(len(pts)):
            if bestd[idx] <= JOINT_RADIUS * w:
                claims[kids[best[idx]]].append((pid, idx))
                used.add(idx)
        unused = [i for i in range(len(pts)) if i not in used]
        for k in kids:
            active[k].skipped_spans[pid] = unused
    for s in children:
        cand = claims[s.id]
        if not cand:
            raise EmptyJointRow(
                f"segment {s.id}: no last-row stitch of parents {s.parents} lies within "
                f"{JOINT_RADIUS}w of its boundary"
            )
        ids = np.array([active[p].rows[-1][i] for p, i in cand], dtype=np.int64)
        first = s.rows[0]
        if len(first) >= MIN_RING:
            par = _polyline_param(positions[first], positions[ids])
        else:
            par = np.zeros(len(ids))
        order = sorted(range(len(cand)), key=lambda k: (par[k], cand[k]))
        cand = [cand[k] for k in order]
        ids = ids[order]
        breaks = np.zeros(max(len(cand) - 1, 0), dtype=bool)
        for k in range(len(cand) - 1):
            (p0, i0), (p1, i1) = cand[k], cand[k + 1]
            n_p = len(active[p0].rows[-1])
            breaks[k] = p0 != p1 or (i0 + 1) % n_p != i1
        try:
            pairs, _ = dtw_couple(positions[ids], positions[first], breaks)
        except ValueError:
            raise EmptyJointRow(
                f"segment {s.id}: joint row of {len(cand)} stitches cannot be coupled "
                f"to a first round of {len(first)}"
            ) from None
        s.joint_row = ids
        s.provenance = cand
        s.couplings[0] = pairs
        s.modifiers[0] = np.zeros(len(pairs), dtype=np.int64)


def build_graph(mesh, dag, fields, w, seed, name=""):
    """Assemble the crochet graph from per-segment (cut, f, g) triples.

    ``fields`` maps segment id to ``(cut, g)`` or ``(cut, g, target)`` and
    holds the row function under the key ``"f"``.
    """
    f = fields["f"]
    builder = GraphBuilder()
    gsegs = []
    notes = []
    for seg in dag.segments:
        gs = GraphSegment(id=seg.id, parents=[p for p in seg.parents], skipped=seg.skipped)
        gsegs.append(gs)
    by_id = {s.id: s for s in gsegs}
    for sid in dag.order:
        seg = dag.segments[sid]
        gs = by_id[sid]
        if seg.skipped:
            notes.append(f"segment {sid} is thinner than one stitch and is not crocheted")
            continue
        gs.parents = [p for p in seg.parents if not by_id[p].skipped]
        cut, g, *rest = fields[sid]
        samples, _ = sample_rows(
            mesh, dag, seg, cut, f, g, w,
            seed=seed if not seg.parents else None,
            target=rest[0] if rest else None,
        )
        for r, smp in enumerate(samples):
            gs.rows.append(builder.add_row(sid, r, smp))
            gs.levels.append(smp.level)
        gs.couplings = [None] * len(gs.rows)
        gs.modifiers = [None] * len(gs.rows)
    positions, faces, bary, segs, rows, cols = builder.arrays()
    for gs in gsegs:
        if gs.rows:
            couple_rows(positions, gs)
    couple_segments(mesh, dag, gsegs, positions, w)
    root = [s for s in gsegs if s.rows and not s.parents]
    seed_id = int(root[0].rows[0][0]) if root else 0
    return CrochetGraph(
        positions, faces, bary, segs, rows, cols, gsegs, float(w), seed_id, name, notes
    )


# ---------------------------------------------------------------- validation


@dataclass
class Diagnostic:
    kind: str
    segment: int
    row: int
    message: str

    def __str__(self):
        return f"[{self.kind}] segment {self.segment} row {self.row}: {self.message}"


@dataclass
class GraphReport:
    diagnostics: list
    mean_edge_length: float
    stitch_width: float

    @property
    def ok(self):
        return not self.diagnostics

    def kinds(self):
        return sorted({d.kind for d in self.diagnostics})

    def __str__(self):
        if self.ok:
            return f"PASS: mean edge length {self.mean_edge_length:.4g} (w = {self.stitch_width:.4g})"
        return "FAIL:\n" + "\n".join(str(d) for d in self.diagnostics)


def check_coupling(pairs, n, m):
    """Problems with a coupling between rows of sizes n and m (empty if valid)."""
    out = []
    if pairs is None or len(pairs) == 0:
        return [("endpoint", "rows are not coupled")]
    pairs = np.asarray(pairs)
    if tuple(pairs[0]) != (0, 0) or tuple(pairs[-1]) != (n - 1, m - 1):
        out.append(("endpoint", f"coupling must run from (0, 0) to ({n - 1}, {m - 1})"))
    if len({tuple(p) for p in pairs.tolist()}) != len(pairs):
        out.append(("duplicate", "repeated pair"))
    if np.any(pairs < 0) or np.any(pairs[:, 0] >= n) or np.any(pairs[:, 1] >= m):
        out.append(("range", "pair index outside its row"))
    d = np.diff(pairs, axis=0)
    if np.any(d < 0):
        out.append(("monotonicity", "pairs cross"))
    elif np.any(d.max(axis=1) > 1) or np.any(d.sum(axis=1) == 0):
        out.append(("continuity", "pairs skip a vertex"))
    else:
        # a top fed by a fan of bases while its base also fans out
        kinds = [(int(a), int(b)) for a, b in d.tolist()]
        for k in range(len(kinds) - 1):
            if {kinds[k], kinds[k + 1]} == {(0, 1), (1, 0)}:
                out.append(("zigzag", f"pairs {k}..{k + 2} mix an increase and a decrease"))
                break
    return out


def _joint_problem(graph, s, pairs):
    # a decrease may not merge stitches across a parent switch or a skipped span
    for a, b in zip(pairs[:-1].tolist(), pairs[1:].tolist()):
        if b[1] == a[1] and b[0] == a[0] + 1 and b[0] < len(s.provenance):
            (p0, i0), (p1, i1) = s.provenance[a[0]], s.provenance[b[0]]
            n_p = len(graph.segments[p0].rows[-1])
            if p0 != p1 or (i0 + 1) % n_p != i1:
                return f"a decrease spans a break in the joint row at {a[0]}"
    return ""


def validate_graph(graph):
    diags = []
    lengths = []
    P = graph.positions
    for s in graph.active():
        for r, cur in enumerate(s.rows):
            prev = s.previous(r)
            pairs = s.couplings[r] if r < len(s.couplings) else None
            if prev is None:
                if pairs is not None:
                    diags.append(Diagnostic("endpoint", s.id, r, "first row has no previous row"))
                if len(cur) != 1 and not s.parents:
                    diags.append(Diagnostic("seed", s.id, r, "root segment must start at the seed"))
                continue
            for kind, msg in check_coupling(pairs, len(prev), len(cur)):
                diags.append(Diagnostic(kind, s.id, r, msg))
            if pairs is not None and len(pairs):
                ok = (pairs[:, 0] < len(prev)) & (pairs[:, 1] < len(cur)) & (pairs >= 0).all(axis=1)
                q = pairs[ok]
                lengths.append(np.linalg.norm(P[prev[q[:, 0]]] - P[cur[q[:, 1]]], axis=1))
            if r == 0 and s.provenance and pairs is not None:
                msg = _joint_problem(graph, s, pairs)
                if msg:
                    diags.append(Diagnostic("joint", s.id, r, msg))
    re = graph.row_edges()
    if len(re):
        lengths.append(np.linalg.norm(P[re[:, 0]] - P[re[:, 1]], axis=1))
    mean = float(np.concatenate(lengths).mean()) if lengths else float("nan")
    w = graph.stitch_width
    if not abs(mean - w) <= EDGE_TOL * w:
        diags.append(
            Diagnostic("edge_length", -1, -1, f"mean edge length {mean:.4g} is not within 15% of w = {w:.4g}")
        )
    return GraphReport(diags, mean, w)
