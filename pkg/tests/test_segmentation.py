import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amigo import shapes
from amigo.geodesic import tune_time_parameter
from amigo.mesh import normalize_area
from amigo.segmentation import (
    Segment,
    SegmentDag,
    extract_isoline,
    filter_thin_segments,
    segment_at_saddles,
)


def field_for(mesh, seed):
    tuned = tune_time_parameter(mesh, seed)
    return tuned.field.values, tuned.criticals


@pytest.fixture(scope="module")
def sphere():
    m = normalize_area(shapes.icosphere(4))
    seed = int(np.argmin(m.vertices[:, 2]))
    f, crit = field_for(m, seed)
    return m, f, crit


@pytest.fixture(scope="module")
def torus():
    m = normalize_area(shapes.torus())
    f, crit = field_for(m, int(np.argmin(m.vertices[:, 0])))
    return m, f, crit


@pytest.fixture(scope="module")
def two_ear():
    m = normalize_area(shapes.two_ear_sphere())
    f, crit = field_for(m, int(np.argmin(m.vertices[:, 2])))
    return m, f, crit


def test_sphere_equator_length(sphere):
    m, f, _ = sphere
    level = f.max() / 2
    loops = extract_isoline(m, f, level)
    assert len(loops) == 1 and loops[0].closed
    r = 1 / (2 * np.sqrt(np.pi))
    assert loops[0].length == pytest.approx(2 * np.pi * r * np.sin(level / r), rel=0.02)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.95))
def test_isoline_points_on_level(frac):
    m = normalize_area(shapes.icosphere(3))
    f = m.vertices[:, 2] - m.vertices[:, 2].min()
    level = frac * f.max()
    for loop in extract_isoline(m, f, level):
        a, b = loop.edges[:, 0], loop.edges[:, 1]
        vals = (1 - loop.lam) * f[a] + loop.lam * f[b]
        assert np.allclose(vals, level, atol=1e-9)
        # consecutive crossings share a face
        for k in range(len(loop.faces)):
            tri = set(m.faces[loop.faces[k]].tolist())
            assert {int(a[k]), int(b[k])} <= tri


def test_torus_two_loops(torus):
    m, f, crit = torus
    s1, s2 = sorted(f[crit.saddles])
    assert len(extract_isoline(m, f, 0.5 * (s1 + s2))) == 2


def test_tiny_loop_near_max(sphere):
    m, f, _ = sphere
    loops = extract_isoline(m, f, f.max() - 1e-4)
    assert len(loops) == 1 and loops[0].length < 0.01


def test_sphere_single_segment(sphere):
    m, f, crit = sphere
    dag = segment_at_saddles(m, f, crit)
    assert len(dag) == 1 and dag.edges == []


def test_two_ear_dag(two_ear):
    m, f, crit = two_ear
    dag = segment_at_saddles(m, f, crit)
    assert len(dag) == 3
    root = dag.order[0]
    assert dag.segments[root].parents == []
    assert sorted(dag.edges) == sorted((root, c) for c in range(3) if c != root)


def test_torus_dag(torus):
    # root cap, two arms, top cap (see the decisions ledger)
    m, f, crit = torus
    dag = segment_at_saddles(m, f, crit)
    assert len(dag) == 4
    sizes = sorted(len(s.parents) for s in dag.segments)
    assert sizes == [0, 1, 1, 2]


@pytest.mark.parametrize("name", ["sphere", "torus", "two_ear"])
def test_partition_and_acyclic(name, request):
    m, f, crit = request.getfixturevalue(name)
    dag = segment_at_saddles(m, f, crit)
    faces = np.concatenate([s.faces for s in dag.segments])
    assert np.array_equal(np.sort(faces), np.arange(m.n_faces))
    pos = {s: i for i, s in enumerate(dag.order)}
    for a, b in dag.edges:
        assert pos[a] < pos[b]
        assert dag.segments[a].f_lo < dag.segments[b].f_lo


@pytest.mark.parametrize("name", ["sphere", "torus", "two_ear"])
def test_segments_disk_or_annulus(name, request):
    m, f, crit = request.getfixturevalue(name)
    dag = segment_at_saddles(m, f, crit)
    for s in dag.segments:
        F = m.faces[s.faces]
        e = np.unique(np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1), axis=0)
        chi = len(np.unique(F)) - len(e) + len(F)
        # a saddle-free surface stays whole (chi 2); the cut still opens it to a disk
        assert chi in (0, 1, 2), (s.id, chi)
        assert len(s.boundary_loops) == 2 - chi


def _chain():
    def seg(i, lo, hi, parents, children):
        return Segment(i, np.array([i]), i, lo, hi, [], parents, children)

    segs = [seg(0, 0.0, 1.0, [], [1]), seg(1, 1.0, 1.02, [0], [2]), seg(2, 1.02, 1.5, [1], [])]
    return SegmentDag(segs, [(0, 1), (1, 2)], [0, 1, 2], np.zeros(3, dtype=int), [1.0, 1.02])


def test_thin_segment_skipped():
    dag = _chain()
    w = 0.05  # middle segment extent 0.02 = 0.4 w
    with pytest.warns(RuntimeWarning):
        out = filter_thin_segments(dag, w)
    assert [s.skipped for s in out.segments] == [False, True, True]
    # input untouched
    assert not any(s.skipped for s in dag.segments)


def test_no_thin_segments_unchanged():
    dag = _chain()
    out = filter_thin_segments(dag, 0.01)
    assert [s.skipped for s in out.segments] == [False, False, False]
    assert out.edges == dag.edges and out.order == dag.order
