import copy
import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amigo.errors import NotCoupled, PatternSyntaxError, StitchCountMismatch
from amigo.graph import BLO, FLO, NORMAL
from amigo.mesh import compute_curvatures
from amigo.pattern import (
    Group,
    Run,
    Stitch,
    compare_graphs,
    crease_vertices,
    dec,
    fold_round,
    fold_rounds,
    graph_connectivity,
    inc,
    interpret_pattern,
    mark_creases,
    parse_items,
    parse_pattern,
    reconstruct_row,
    render_pattern,
    sc,
    unfold,
)
from conftest import MODELS, compiled


def texts(items):
    return ", ".join(str(it) for it in items)


# ---------------------------------------------------------------- transducer


def test_identity_coupling_is_all_sc():
    pairs = [(i, i) for i in range(4)]
    assert reconstruct_row(pairs, 4, 4) == [sc()] * 4


def test_doubling_is_all_inc():
    pairs = [(i // 2, i) for i in range(6)]
    assert reconstruct_row(pairs, 3, 6) == [inc()] * 3


def test_halving_is_all_dec():
    pairs = [(i, i // 2) for i in range(6)]
    assert reconstruct_row(pairs, 6, 3) == [dec()] * 3


def test_wide_increase_and_decrease():
    assert reconstruct_row([(0, 0), (0, 1), (0, 2), (1, 3)], 2, 4) == [inc(3), sc()]
    assert reconstruct_row([(0, 0), (1, 0), (2, 0), (3, 1)], 4, 2) == [dec(3), sc()]


def test_magic_ring():
    pairs = [(0, j) for j in range(6)]
    assert reconstruct_row(pairs, 1, 6, magic=True) == [Stitch("MR", 6)]


def test_zigzag_rejected():
    with pytest.raises(NotCoupled):
        reconstruct_row([(0, 0), (0, 1), (1, 1)], 2, 2)


def test_modifiers_apply_per_stitch():
    pairs = [(0, 0), (0, 1), (1, 2)]
    trace = reconstruct_row(pairs, 2, 3, mods=[BLO, NORMAL, NORMAL])
    assert trace == [inc(2, "BLO"), sc()]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["sc", "inc", "dec", "inc3", "dec3"]), min_size=1, max_size=12))
def test_transducer_inverts_coupling(kinds):
    # build the coupling a stitch list implies, then recover the stitches
    pairs, a, b, want = [], 0, 0, []
    for k in kinds:
        x = int(k[3:] or 2) if k != "sc" else 1
        if k.startswith("inc"):
            pairs += [(a, b + j) for j in range(x)]
            a, b = a + 1, b + x
            want.append(inc(x))
        elif k.startswith("dec"):
            pairs += [(a + j, b) for j in range(x)]
            a, b = a + x, b + 1
            want.append(dec(x))
        else:
            pairs.append((a, b))
            a, b = a + 1, b + 1
            want.append(sc())
    trace = reconstruct_row(pairs, a, b)
    assert trace == want
    assert sum(s.bases for s in trace) == a
    assert sum(s.tops for s in trace) == b


# ---------------------------------------------------------------- folding


def test_fold_repeat_example():
    rnd = [sc(), inc(), sc(), sc()] * 3
    specs = fold_rounds([rnd, rnd], first=2)
    assert len(specs) == 1
    assert specs[0].text("rows") == "rows 2-3: (sc, inc, 2sc)*3"


def test_fold_plain_run():
    assert texts(fold_round([sc()] * 6)) == "6sc"


def test_fold_leaves_irregular_round():
    trace = [sc(), inc(), dec(), sc(), inc(3)]
    assert texts(fold_round(trace)) == "sc, inc, dec, sc, inc 3"


def test_fold_prefix_and_suffix():
    trace = [dec()] + [sc(), inc()] * 4 + [sc(), sc()]
    assert texts(fold_round(trace)) == "dec, (sc, inc)*4, 2sc"


def test_rounds_merge_only_when_identical():
    a, b = [sc()] * 6, [sc(), inc()] * 3
    specs = fold_rounds([a, a, b, a], first=1)
    assert [(s.first, s.last) for s in specs] == [(1, 2), (3, 3), (4, 4)]


tokens = st.lists(
    st.sampled_from([sc(), inc(), dec(), inc(3), sc("BLO"), dec(2, "FLO")]), min_size=0, max_size=30
)


@settings(max_examples=200, deadline=None)
@given(tokens)
def test_fold_unfold_round_trip(trace):
    items = fold_round(trace)
    assert unfold(items) == trace
    # the text form parses back to the same trace
    assert unfold(parse_items(texts(items))) == trace
    # folding never lengthens the item list
    assert len(items) <= max(len(trace), 0)


@settings(max_examples=100, deadline=None)
@given(tokens)
def test_folded_groups_are_non_trivial(trace):
    for it in fold_round(trace):
        if isinstance(it, Group):
            assert it.count >= 2 and len(it.unfold()) >= 4
        else:
            assert isinstance(it, Run) and it.count >= 1


# ---------------------------------------------------------------- parsing


@pytest.mark.parametrize(
    "text, expect",
    [
        ("6sc", [sc()] * 6),
        ("inc", [inc()]),
        ("inc 3", [inc(3)]),
        ("2dec 4", [dec(4)] * 2),
        ("BLO sc", [sc("BLO")]),
        ("3 FLO sc", [sc("FLO")] * 3),
        ("(sc, inc)*2", [sc(), inc(), sc(), inc()]),
        ("attach 0, skip 3, sc", [Stitch("attach", 0), Stitch("skip", 3), sc()]),
    ],
)
def test_parse_items(text, expect):
    assert unfold(parse_items(text)) == expect


@pytest.mark.parametrize("text", ["hdc", "sc 3", "inc 1", "(sc, inc", "((sc)*2)*2", "MR", "(sc)"])
def test_parse_errors(text):
    with pytest.raises(PatternSyntaxError):
        parse_items(text)


def _pattern(*rounds):
    body = "\n".join(rounds)
    return parse_pattern(f"AmiGo crochet pattern\n\nSegment 0\n{body}\n")


def test_interpret_counts():
    g = interpret_pattern(_pattern("Rnd 1: MR 6", "Rnd 2: (sc, inc)*3"))
    assert g.rows[0] == [1, 6, 9]
    assert len([e for e in g.column_edges if e[0][1] == 1]) == 9


def test_interpret_rejects_bad_count():
    with pytest.raises(StitchCountMismatch) as exc:
        interpret_pattern(_pattern("Rnd 1: MR 4", "Rnd 2: 5sc"))
    assert exc.value.round_number == 2


def test_interpret_rejects_short_round():
    with pytest.raises(StitchCountMismatch):
        interpret_pattern(_pattern("Rnd 1: MR 6", "Rnd 2: 4sc"))


# ---------------------------------------------------------------- compiled models


def test_sphere_pattern_text():
    res = compiled("sphere")
    lines = res.text.splitlines()
    assert lines[0] == "AmiGo crochet pattern"
    rnd = [ln for ln in lines if ln.startswith("Rnd")]
    assert rnd[0].startswith("Rnd 1: MR ")
    assert "Segment 0" in lines


def test_cylinder_side_rounds_merge():
    text = compiled("capped_cylinder").text
    assert any(ln.startswith("Rnds ") and ln.endswith("sc") for ln in text.splitlines())


@pytest.mark.parametrize("name", list(MODELS))
def test_round_trip(name):
    res = compiled(name)
    parsed = parse_pattern(res.text)
    assert render_pattern(parsed) == res.text
    diffs = compare_graphs(interpret_pattern(parsed), graph_connectivity(res.graph))
    assert diffs == []


def test_two_ear_joins():
    res = compiled("two_ear")
    pat = parse_pattern(res.text)
    assert pat.segments[0].parents == []
    for seg in pat.segments[1:]:
        first = seg.rounds[0].unfold()
        assert first[0] == Stitch("attach", pat.segments[0].id)
        assert seg.join.startswith("Join:")


@pytest.mark.parametrize("name", list(MODELS))
def test_tops_and_bases_balance(name):
    # each round consumes exactly the previous round's stitches
    res = compiled(name)
    for seg in parse_pattern(res.text).segments:
        rounds = seg.flat_rounds()
        for prev, cur in zip(rounds, rounds[1:]):
            if any(s.kind == "attach" for s in cur):
                continue
            assert sum(s.bases for s in cur) == sum(s.tops for s in prev)


# ---------------------------------------------------------------- creases


def _rim_rounds(res):
    """(segment, row) pairs whose base row lies on a rim of the cylinder."""
    g, p = res.graph, res.mesh.vertices
    R = np.hypot(p[:, 0], p[:, 1]).max()
    z0, z1 = p[:, 2].min(), p[:, 2].max()
    w = g.stitch_width
    out = []
    for s in g.active():
        for r, pairs in enumerate(s.couplings):
            if pairs is None:
                continue
            q = g.positions[s.previous(r)]
            rad = np.hypot(q[:, 0], q[:, 1])
            dz = np.minimum(np.abs(q[:, 2] - z0), np.abs(q[:, 2] - z1))
            if len(q) >= 3 and np.abs(rad - R).max() < 0.5 * w and dz.max() < 0.5 * w:
                out.append((s, r))
    return out


def test_cylinder_rims_are_back_loop():
    res = compiled("capped_cylinder", creases=True)
    rims = _rim_rounds(res)
    assert len(rims) == 2
    rim_keys = {(s.id, r) for s, r in rims}
    for s, r in rims:
        assert (s.modifiers[r] == BLO).all()
    for s in res.graph.active():
        for r, mods in enumerate(s.modifiers):
            if mods is not None and (s.id, r) not in rim_keys:
                assert (mods == NORMAL).all(), (s.id, r)
    assert "BLO" in res.text


def test_sphere_has_no_creases():
    res = compiled("sphere", creases=True)
    assert "BLO" not in res.text and "FLO" not in res.text


def test_creases_off_by_default():
    assert "BLO" not in compiled("capped_cylinder").text


def test_flo_for_concave_crease():
    res = compiled("capped_cylinder")
    c = compute_curvatures(res.mesh)
    # flipping the curvature sign turns the convex rims into valleys
    curv = dataclasses.replace(c, mean=-c.mean, k1=-c.k1, k2=-c.k2)
    g = copy.deepcopy(res.graph)
    flag = crease_vertices(g, res.mesh, curv, res.field)
    assert (flag <= 0).all() and (flag < 0).any()
    mark_creases(g, res.mesh, curv, res.field)
    mods = np.concatenate([m for s in g.active() for m in s.modifiers if m is not None])
    assert (mods == FLO).any() and not (mods == BLO).any()
