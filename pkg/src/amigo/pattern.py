"""Instruction reconstruction, loop folding, pattern text and its interpreter.

A round is a flat list of :class:`Stitch` tokens.  Folding turns it into
items, each either a :class:`Run` (one stitch repeated) or a :class:`Group`
(a parenthesized list of runs repeated).  Pattern text grammar::

    pattern := header segment+
    segment := "Segment" id joinNote? round+
    round   := ("Rnd" NUM | "Rnds" NUM "-" NUM) ":" item ("," item)*
    item    := [NUM] stitch | "(" item ("," item)* ")" "*" NUM
    stitch  := ["BLO" | "FLO"] ("sc" | "inc" NUM? | "dec" NUM? | "MR" NUM
               | "skip" NUM | "attach" id)

``inc`` and ``dec`` without a number mean two.  ``attach P`` switches the
working row to the last round of segment P and ``skip n`` passes over n of
its stitches; each parent keeps its own position within a round.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import NotCoupled, PatternSyntaxError, StitchCountMismatch
from .graph import BLO, FLO, NORMAL, check_coupling

KINDS = ("sc", "inc", "dec", "MR", "skip", "attach")
MOD_CODE = {"": NORMAL, "BLO": BLO, "FLO": FLO}
MOD_NAME = {v: k for k, v in MOD_CODE.items()}


@dataclass(frozen=True)
class Stitch:
    kind: str
    arg: int = 0
    mod: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown stitch {self.kind!r}")
        if self.kind in ("inc", "dec") and self.arg < 2:
            raise ValueError(f"{self.kind} needs at least 2 loops, got {self.arg}")

    @property
    def bases(self):
        return {"sc": 1, "inc": 1, "dec": self.arg, "MR": 0}.get(self.kind, 0)

    @property
    def tops(self):
        return {"sc": 1, "inc": self.arg, "dec": 1, "MR": self.arg}.get(self.kind, 0)

    def __str__(self):
        if self.kind == "sc":
            body = "sc"
        elif self.kind in ("inc", "dec"):
            body = self.kind if self.arg == 2 else f"{self.kind} {self.arg}"
        else:
            body = f"{self.kind} {self.arg}"
        return f"{self.mod} {body}" if self.mod else body


def sc(mod=""):
    return Stitch("sc", 0, mod)


def inc(x=2, mod=""):
    return Stitch("inc", x, mod)


def dec(x=2, mod=""):
    return Stitch("dec", x, mod)


@dataclass(frozen=True)
class Run:
    stitch: Stitch
    count: int = 1

    def unfold(self):
        return [self.stitch] * self.count

    def __str__(self):
        if self.count == 1:
            return str(self.stitch)
        sep = " " if self.stitch.mod or self.stitch.kind in ("MR", "skip", "attach") else ""
        return f"{self.count}{sep}{self.stitch}"


@dataclass(frozen=True)
class Group:
    items: tuple
    count: int

    def unfold(self):
        unit = [s for it in self.items for s in it.unfold()]
        return unit * self.count

    def __str__(self):
        return "(" + ", ".join(str(it) for it in self.items) + f")*{self.count}"


@dataclass
class RoundSpec:
    first: int
    last: int
    items: list

    def unfold(self):
        return [s for it in self.items for s in it.unfold()]

    def label(self, word="Rnd"):
        if self.first == self.last:
            return f"{word} {self.first}"
        plural = word + "s" if word[0].isupper() else word
        return f"{plural} {self.first}-{self.last}"

    def text(self, word="Rnd"):
        return f"{self.label(word)}: " + ", ".join(str(it) for it in self.items)


@dataclass
class SegmentPattern:
    id: int
    parents: list
    rounds: list
    join: str = ""

    def flat_rounds(self):
        out = []
        for spec in self.rounds:
            trace = spec.unfold()
            out += [trace] * (spec.last - spec.first + 1)
        return out


@dataclass
class Pattern:
    segments: list
    header: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


# ---------------------------------------------------------------- transducer


def _groups(pairs):
    """Split a coupling into (bases, tops) stitch groups left to right."""
    out = []
    i = 0
    n = len(pairs)
    while i < n:
        s, t = pairs[i]
        j = i
        if i + 1 < n and pairs[i + 1][0] == s:
            while j + 1 < n and pairs[j + 1][0] == s:
                j += 1
            out.append(([s], [p[1] for p in pairs[i : j + 1]]))
        elif i + 1 < n and pairs[i + 1][1] == t:
            while j + 1 < n and pairs[j + 1][1] == t:
                j += 1
            out.append(([p[0] for p in pairs[i : j + 1]], [t]))
        else:
            out.append(([s], [t]))
        i = j + 1
    return out


def reconstruct_row(pairs, n_prev, n_cur, mods=None, provenance=None, parent_sizes=None, magic=False):
    """Flat stitch trace for one coupled row pair."""
    problems = check_coupling(pairs, n_prev, n_cur)
    if problems:
        raise NotCoupled("; ".join(f"{k}: {m}" for k, m in problems))
    pairs = [tuple(p) for p in np.asarray(pairs).tolist()]
    if mods is None:
        mods = [NORMAL] * len(pairs)
    mod_of = dict(zip(pairs, list(mods)))
    groups = _groups(pairs)
    seen_b, seen_t = set(), set()
    for bases, tops in groups:
        if seen_b & set(bases) or seen_t & set(tops):
            raise NotCoupled("a stitch both increases and decreases (zigzag coupling)")
        seen_b |= set(bases)
        seen_t |= set(tops)
    if magic:
        if n_prev != 1:
            raise NotCoupled("a magic ring starts from a single point")
        return [Stitch("MR", n_cur)]

    trace = []
    cur_parent = None
    pointer = {}
    for bases, tops in groups:
        if provenance is not None:
            p, idx = provenance[bases[0]]
            if p != cur_parent:
                trace.append(Stitch("attach", int(p)))
                cur_parent = p
            size = parent_sizes[p]
            at = pointer.get(p, 0)
            if idx != at:
                trace.append(Stitch("skip", int((idx - at) % size)))
            for b0, b1 in zip(bases[:-1], bases[1:]):
                q0, i0 = provenance[b0]
                q1, i1 = provenance[b1]
                if q1 != q0 or (i0 + 1) % size != i1:
                    raise NotCoupled("a decrease spans a break in the joint row")
            pointer[p] = (provenance[bases[-1]][1] + 1) % size
        codes = [mod_of[(b, t)] for b in bases for t in tops if (b, t) in mod_of]
        mod = MOD_NAME[BLO] if BLO in codes else MOD_NAME[FLO] if FLO in codes else ""
        if len(bases) > 1:
            trace.append(Stitch("dec", len(bases), mod))
        elif len(tops) > 1:
            trace.append(Stitch("inc", len(tops), mod))
        else:
            trace.append(Stitch("sc", 0, mod))
    return trace


def reconstruct(graph):
    """Flat traces per segment: ``{segment id: [round trace, ...]}`` in crochet order."""
    out = {}
    sizes = {s.id: len(s.rows[-1]) for s in graph.active()}
    for s in graph.order():
        rounds = []
        for r, cur in enumerate(s.rows):
            pairs = s.couplings[r]
            if pairs is None:
                continue
            prev = s.previous(r)
            joint = r == 0 and s.parents
            rounds.append(
                reconstruct_row(
                    pairs,
                    len(prev),
                    len(cur),
                    s.modifiers[r],
                    provenance=s.provenance if joint else None,
                    parent_sizes=sizes if joint else None,
                    magic=(r == 1 and not s.parents and len(s.rows[0]) == 1),
                )
            )
        out[s.id] = rounds
    return out


# ---------------------------------------------------------------- folding


def _primitive(unit):
    p = len(unit)
    for d in range(1, p):
        if p % d == 0 and unit == unit[:d] * (p // d):
            return False
    return True


def run_length(tokens):
    out = []
    for t in tokens:
        if out and out[-1].stitch == t:
            out[-1] = Run(t, out[-1].count + 1)
        else:
            out.append(Run(t, 1))
    return out


def best_repeat(tokens):
    """(start, period, count) of the repeat covering most stitches, or None."""
    L = len(tokens)
    best = None
    for p in range(2, L // 2 + 1):
        for i in range(0, L - 2 * p + 1):
            unit = tokens[i : i + p]
            k = 1
            while i + (k + 1) * p <= L and tokens[i + k * p : i + (k + 1) * p] == unit:
                k += 1
            if k < 2 or not _primitive(unit):
                continue
            key = (-k * p, i, p)
            if best is None or key < best[0]:
                best = (key, (i, p, k))
    return None if best is None else best[1]


def fold_round(tokens):
    """Fold one flat round: repeated sequences first, then runs of a stitch."""
    tokens = list(tokens)
    rep = best_repeat(tokens)
    if rep is None:
        return run_length(tokens)
    i, p, k = rep
    group = Group(tuple(run_length(tokens[i : i + p])), k)
    return fold_round(tokens[:i]) + [group] + fold_round(tokens[i + p * k :])


def fold_rounds(traces, first=1):
    """Fold a list of flat rounds, merging identical consecutive rounds."""
    specs = []
    num = first
    for trace in traces:
        if specs and specs[-1].unfold() == list(trace):
            specs[-1].last = num
        else:
            specs.append(RoundSpec(num, num, fold_round(trace)))
        num += 1
    return specs


def unfold(items):
    return [s for it in items for s in it.unfold()]


def fold_pattern(graph, traces=None):
    """Folded pattern with global round numbers in crochet order."""
    if traces is None:
        traces = reconstruct(graph)
    segs = []
    num = 1
    last_round = {}
    for s in graph.order():
        rounds = traces[s.id]
        join = ""
        if s.parents:
            where = ", ".join(f"Rnd {last_round[p]} of segment {p}" for p in s.parents)
            join = f"Join: work into {where}"
        specs = fold_rounds(rounds, num)
        num += len(rounds)
        last_round[s.id] = num - 1
        segs.append(SegmentPattern(s.id, list(s.parents), specs, join))
    stats = graph.stats()
    header = {
        "Model": graph.name or "mesh",
        "Stitch width": f"{graph.stitch_width:.6g}",
        "Rows": str(stats["rows"]),
        "Segments": str(stats["segments"]),
        "Stitches": str(stats["stitches"]),
    }
    return Pattern(segs, header, list(graph.notes))


def render_pattern(pattern, word="Rnd"):
    lines = ["AmiGo crochet pattern"]
    lines += [f"{k}: {v}" for k, v in pattern.header.items()]
    lines += [f"Note: {n}" for n in pattern.notes]
    for seg in pattern.segments:
        lines.append("")
        lines.append(f"Segment {seg.id}")
        if seg.join:
            lines.append(seg.join)
        lines += [spec.text(word) for spec in seg.rounds]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- parsing

_STITCH = re.compile(
    r"^(?:(\d+)\s*)?(?:(BLO|FLO)\s+)?(sc|inc|dec|MR|skip|attach)(?:\s*(\d+))?$"
)
_ROUND = re.compile(r"^(?:Rnd|Rnds|rnd|rnds|Row|Rows|row|rows)\s+(\d+)(?:\s*-\s*(\d+))?\s*:\s*(.*)$")


def _split_top(text):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise PatternSyntaxError(f"unbalanced ')' in {text!r}")
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise PatternSyntaxError(f"unbalanced '(' in {text!r}")
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


def parse_items(text):
    items = []
    for part in _split_top(text):
        if part.startswith("("):
            m = re.match(r"^\((.*)\)\s*\*\s*(\d+)$", part)
            if not m:
                raise PatternSyntaxError(f"bad group {part!r}")
            inner = parse_items(m.group(1))
            if any(isinstance(it, Group) for it in inner):
                raise PatternSyntaxError(f"nested groups are not supported: {part!r}")
            items.append(Group(tuple(inner), int(m.group(2))))
            continue
        m = _STITCH.match(part)
        if not m:
            raise PatternSyntaxError(f"unknown stitch {part!r}")
        count, mod, kind, arg = m.groups()
        if kind in ("inc", "dec"):
            arg = int(arg) if arg else 2
        elif kind == "sc":
            if arg:
                raise PatternSyntaxError(f"sc takes no number: {part!r}")
            arg = 0
        else:
            if arg is None:
                raise PatternSyntaxError(f"{kind} needs a number: {part!r}")
            arg = int(arg)
        try:
            st = Stitch(kind, arg, mod or "")
        except ValueError as exc:
            raise PatternSyntaxError(str(exc)) from None
        items.append(Run(st, int(count) if count else 1))
    return items


def parse_pattern(text):
    segs = []
    header = {}
    notes = []
    cur = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("Note:"):
            notes.append(line[5:].strip())
            continue
        m = re.match(r"^Segment\s+(\d+)$", line)
        if m:
            cur = SegmentPattern(int(m.group(1)), [], [])
            segs.append(cur)
            continue
        if cur is None:
            if ":" in line:
                k, v = line.split(":", 1)
                header[k.strip()] = v.strip()
            continue
        if line.startswith("Join:"):
            cur.join = line
            cur.parents = [int(p) for p in re.findall(r"of segment (\d+)", line)]
            continue
        m = _ROUND.match(line)
        if not m:
            raise PatternSyntaxError(f"cannot parse line {line!r}")
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) else a
        if b < a:
            raise PatternSyntaxError(f"bad round range in {line!r}")
        cur.rounds.append(RoundSpec(a, b, parse_items(m.group(3))))
    if not segs:
        raise PatternSyntaxError("pattern has no segments")
    return Pattern(segs, header, notes)


# ---------------------------------------------------------------- interpreter


@dataclass
class InterpretedGraph:
    """Connectivity produced by executing a pattern.

    Vertices are labelled (segment, row, column); column edges are
    (base label, top label, modifier code).
    """

    rows: dict  # segment -> list of row sizes
    column_edges: list
    round_of: dict = field(default_factory=dict)

    def row_edges(self):
        out = []
        for sid, sizes in self.rows.items():
            for r, n in enumerate(sizes):
                out += [((sid, r, j), (sid, r, j + 1)) for j in range(n - 1)]
                if n >= 3:
                    out.append(((sid, r, n - 1), (sid, r, 0)))
        return out


def interpret_pattern(pattern):
    """Execute a pattern; raises :class:`StitchCountMismatch` on bad counts."""
    rows = {}
    edges = []
    round_of = {}
    for seg in pattern.segments:
        sid = seg.id
        sizes = []
        number = seg.rounds[0].first if seg.rounds else 0
        for trace in seg.flat_rounds():
            r = len(sizes)
            prev = None
            if not sizes:
                if trace and trace[0].kind == "MR":
                    if len(trace) != 1:
                        raise StitchCountMismatch(number, trace[0].arg, len(trace))
                    sizes += [1, trace[0].arg]
                    edges += [((sid, 0, 0), (sid, 1, j), NORMAL) for j in range(trace[0].arg)]
                    round_of[(sid, 1)] = number
                    number += 1
                    continue
                if not any(t.kind == "attach" for t in trace):
                    raise StitchCountMismatch(number, 0, 0)
            else:
                prev = [(sid, r - 1, j) for j in range(sizes[-1])]
            bases, tops = _execute(trace, prev, rows, number, sid, r)
            top_count = sum(len(t) for t in tops)
            for bs, ts, st in zip(bases, tops, [t for t in trace if t.kind not in ("skip", "attach")]):
                code = MOD_CODE[st.mod]
                edges += [(b, t, code) for b in bs for t in ts]
            sizes.append(top_count)
            round_of[(sid, r)] = number
            number += 1
        rows[sid] = sizes
    return InterpretedGraph(rows, edges, round_of)


def _execute(trace, prev, rows, number, sid, r):
    """Bases and tops for every stitch of one round."""
    bases, tops = [], []
    col = 0
    ptr = 0
    pointer = {}
    parent = None
    for st in trace:
        if st.kind == "MR":
            raise StitchCountMismatch(number, 0, st.arg)
        if st.kind == "attach":
            if prev is not None or st.arg not in rows:
                raise StitchCountMismatch(number, 0, 0)
            parent = st.arg
            pointer.setdefault(parent, 0)
            continue
        if st.kind == "skip":
            if parent is None:
                raise StitchCountMismatch(number, 0, st.arg)
            pointer[parent] = (pointer[parent] + st.arg) % rows[parent][-1]
            continue
        need = st.bases
        if prev is not None:
            if ptr + need > len(prev):
                raise StitchCountMismatch(number, len(prev), ptr + need)
            bs = prev[ptr : ptr + need]
            ptr += need
        else:
            if parent is None:
                raise StitchCountMismatch(number, 0, need)
            size = rows[parent][-1]
            last = len(rows[parent]) - 1
            bs = []
            for _ in range(need):
                bs.append((parent, last, pointer[parent]))
                pointer[parent] = (pointer[parent] + 1) % size
        ts = [(sid, r, col + k) for k in range(st.tops)]
        col += st.tops
        bases.append(bs)
        tops.append(ts)
    if prev is not None and ptr != len(prev):
        raise StitchCountMismatch(number, len(prev), ptr)
    return bases, tops


def graph_connectivity(graph):
    """The same labelled connectivity, read from a crochet graph."""
    rows = {}
    edges = []
    lab = {}
    for s in graph.order():
        rows[s.id] = [len(ids) for ids in s.rows]
        for r, ids in enumerate(s.rows):
            for j, v in enumerate(ids.tolist()):
                lab[v] = (s.id, r, j)
    for s in graph.order():
        for r, pairs in enumerate(s.couplings):
            if pairs is None:
                continue
            prev = s.previous(r)
            mods = s.modifiers[r]
            for (a, b), m in zip(pairs.tolist(), mods.tolist()):
                edges.append((lab[int(prev[a])], lab[int(s.rows[r][b])], int(m)))
    return InterpretedGraph(rows, edges)


def compare_graphs(a, b, modifiers=True):
    """Differences between two labelled connectivities (empty if isomorphic)."""
    out = []
    if a.rows != b.rows:
        for sid in sorted(set(a.rows) | set(b.rows)):
            ra, rb = a.rows.get(sid), b.rows.get(sid)
            if ra != rb:
                out.append(f"segment {sid}: row sizes {ra} != {rb}")
    key = (lambda e: e) if modifiers else (lambda e: e[:2])
    ea = {key(e) for e in a.column_edges}
    eb = {key(e) for e in b.column_edges}
    if ea != eb:
        out.append(f"column edges differ: {len(ea - eb)} missing, {len(eb - ea)} extra")
    return out


def first_mismatch_round(pattern, graph):
    """Global round number of the first round whose trace disagrees with ``graph``."""
    traces = reconstruct(graph)
    for seg in pattern.segments:
        mine = traces.get(seg.id)
        flat = seg.flat_rounds()
        number = seg.rounds[0].first if seg.rounds else 0
        for k, trace in enumerate(flat):
            if mine is None or k >= len(mine) or mine[k] != trace:
                return number + k
        if mine is not None and len(mine) > len(flat):
            return number + len(flat)
    return None


# ---------------------------------------------------------------- creases

CREASE_ANGLE = 20.0
CREASE_FLOOR = 2.0
CREASE_ANISOTROPY = 2.0


def crease_threshold(curv, floor=CREASE_FLOOR):
    k, _ = curv.max_abs
    return max(floor, float(np.percentile(np.abs(k), 90)))


def crease_vertices(graph, mesh, curv, f, tau=None):
    """Signed crease flag per graph vertex: +1 ridge, -1 valley, 0 none.

    A mesh vertex is a crease vertex when its largest principal curvature
    exceeds ``tau``, clearly dominates the other one, and points across the
    rows (along grad f).  A graph vertex inherits the strongest crease among
    mesh vertices within half a stitch.
    """
    from scipy.spatial import cKDTree

    if tau is None:
        tau = crease_threshold(curv)
    k, d = curv.max_abs
    other = np.where(np.abs(curv.k1) >= np.abs(curv.k2), curv.k2, curv.k1)
    grad_v = np.zeros((mesh.n_vertices, 3))
    fg = mesh.face_gradient(f) * mesh.face_areas[:, None]
    for c in range(3):
        np.add.at(grad_v, mesh.faces[:, c], fg)
    gn = grad_v / np.maximum(np.linalg.norm(grad_v, axis=1, keepdims=True), 1e-300)
    cosang = np.abs(np.einsum("ij,ij->i", d, gn))
    ok = (
        (np.abs(k) > tau)
        & (np.abs(k) > CREASE_ANISOTROPY * np.abs(other))
        & (cosang > np.cos(np.radians(CREASE_ANGLE)))
    )
    flag = np.zeros(graph.n_vertices, dtype=np.int64)
    if not ok.any():
        return flag
    idx = np.flatnonzero(ok)
    tree = cKDTree(mesh.vertices[idx])
    w = graph.stitch_width
    for v, hits in enumerate(tree.query_ball_point(graph.positions, 0.5 * w)):
        if hits:
            best = idx[max(hits, key=lambda h: (abs(k[idx[h]]), -h))]
            flag[v] = 1 if k[best] > 0 else -1
    return flag


def mark_creases(graph, mesh, curv, f, enabled=True, tau=None):
    """Set BLO/FLO on column edges based on crease rows; returns the flags."""
    if not enabled:
        return np.zeros(graph.n_vertices, dtype=np.int64)
    flag = crease_vertices(graph, mesh, curv, f, tau)
    for s in graph.active():
        for r, pairs in enumerate(s.couplings):
            if pairs is None:
                continue
            prev = s.previous(r)
            fl = flag[prev]
            n = len(prev)
            # a base is marked when it and a row neighbour share the crease sign
            mark = np.zeros(n, dtype=np.int64)
            for j in range(n):
                if fl[j] == 0:
                    continue
                nb = [fl[(j - 1) % n], fl[(j + 1) % n]] if n >= 3 else [fl[i] for i in range(n) if i != j]
                if fl[j] in nb:
                    mark[j] = fl[j]
            mods = np.zeros(len(pairs), dtype=np.int64)
            mods[mark[pairs[:, 0]] > 0] = BLO
            mods[mark[pairs[:, 0]] < 0] = FLO
            s.modifiers[r] = _per_stitch(pairs, mods)
    return flag


def _per_stitch(pairs, mods):
    # every column edge of one stitch carries the same loop modifier
    out = mods.copy()
    plist = [tuple(p) for p in pairs.tolist()]
    k = 0
    for bases, tops in _groups(plist):
        size = max(len(bases), len(tops))
        sl = slice(k, k + size)
        block = out[sl]
        out[sl] = BLO if (block == BLO).any() else FLO if (block == FLO).any() else NORMAL
        k += size
    return out
