import json
import re

import numpy as np
import pytest

from amigo import shapes
from amigo.cli import main
from amigo.graph import CrochetGraph
from amigo.mesh import normalize_area, save_obj
from amigo.pipeline import gauge_to_width, resolve_seed

W = 0.08


@pytest.fixture(scope="module")
def sphere_obj(tmp_path_factory):
    path = tmp_path_factory.mktemp("mesh") / "sphere.obj"
    save_obj(shapes.icosphere(3), path)
    return path


@pytest.fixture(scope="module")
def out_dir(sphere_obj, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    assert main(["compile", str(sphere_obj), "--width", str(W), "-o", str(out)]) == 0
    return out


def test_compile_writes_outputs(out_dir):
    names = {p.name for p in out_dir.iterdir()}
    assert {"pattern.txt", "graph.json", "embedding.obj", "stats.json"} <= names


def test_compile_row_count(out_dir):
    stats = json.loads((out_dir / "stats.json").read_text())
    expect = round(np.sqrt(np.pi) / (2 * W))
    assert abs(stats["rows"] - expect) <= 1
    assert stats["segments"] == 1 and stats["graph_valid"]


def test_compile_deterministic(sphere_obj, out_dir, tmp_path):
    assert main(["compile", str(sphere_obj), "--width", str(W), "-o", str(tmp_path)]) == 0
    for name in ("pattern.txt", "graph.json", "embedding.obj"):
        assert (tmp_path / name).read_bytes() == (out_dir / name).read_bytes(), name
    a = json.loads((tmp_path / "stats.json").read_text())
    b = json.loads((out_dir / "stats.json").read_text())
    a.pop("wall_time_s"), b.pop("wall_time_s")
    assert a == b


def test_debug_exports(sphere_obj, tmp_path):
    code = main(["compile", str(sphere_obj), "--width", "0.1", "--no-embed", "--debug-exports", "-o", str(tmp_path)])
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"debug_field.obj", "debug_samples.obj", "debug_param_segment0.obj"} <= names
    assert "embedding.obj" not in names


def test_missing_mesh_exit_2(tmp_path):
    assert main(["compile", str(tmp_path / "nope.obj"), "--width", "0.1", "-o", str(tmp_path)]) == 2


def test_malformed_mesh_exit_2(tmp_path):
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nv 1 0 0\nf 1 2 7\n")
    assert main(["compile", str(bad), "--width", "0.1", "-o", str(tmp_path)]) == 2


def test_bad_seed_exit_2(sphere_obj, tmp_path):
    assert main(["compile", str(sphere_obj), "--width", "0.1", "--seed", "99999", "-o", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "argv",
    [[], ["compile"], ["frobnicate"], ["compile", "x.obj"], ["compile", "x.obj", "--width", "-1"]],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1


def test_seed_point_snaps_to_vertex():
    m = normalize_area(shapes.icosphere(3))
    p = m.vertices[17] + 1e-4
    assert resolve_seed(m, ",".join(map(str, p))) == 17
    assert resolve_seed(m, 5) == 5
    with pytest.raises(ValueError):
        resolve_seed(m, "1,2")


def test_gauge_sets_width():
    m = normalize_area(shapes.capped_cylinder())
    z = m.vertices[:, 2]
    w = gauge_to_width(m, 4.0, 10.0)
    assert w == pytest.approx(np.ptp(z) / 40.0)


def test_config_file_and_flag_precedence(sphere_obj, tmp_path):
    cfg = tmp_path / "amigo.cfg"
    cfg.write_text("# options\nwidth = 0.2\nseed = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["compile", str(sphere_obj), "--no-embed", "--config", str(cfg), "-o", str(a)]) == 0
    assert main(["compile", str(sphere_obj), "--no-embed", "--config", str(cfg), "--width", "0.1", "-o", str(b)]) == 0
    ga = CrochetGraph.load(a / "graph.json")
    gb = CrochetGraph.load(b / "graph.json")
    assert ga.stitch_width == pytest.approx(0.2) and gb.stitch_width == pytest.approx(0.1)


def test_config_unknown_key(sphere_obj, tmp_path):
    cfg = tmp_path / "amigo.cfg"
    cfg.write_text("colour = red\n")
    assert main(["compile", str(sphere_obj), "--config", str(cfg), "-o", str(tmp_path)]) == 1


def test_verify_pass(out_dir, capsys):
    code = main(["verify", str(out_dir / "pattern.txt"), str(out_dir / "graph.json")])
    assert code == 0
    assert capsys.readouterr().out.strip() == "PASS: graphs isomorphic"


def _edit_round(text, number, fn):
    lines = text.splitlines()
    for i, ln in enumerate(lines):
        m = re.match(r"Rnd (\d+): (.*)", ln)
        if m and int(m.group(1)) == number:
            lines[i] = f"Rnd {number}: " + fn(m.group(2))
            return "\n".join(lines) + "\n"
    raise ValueError(number)


def test_verify_extra_stitch_fails(out_dir, tmp_path, capsys):
    text = (out_dir / "pattern.txt").read_text()
    bad = tmp_path / "bad.txt"
    bad.write_text(_edit_round(text, 4, lambda body: body + ", sc"))
    code = main(["verify", str(bad), str(out_dir / "graph.json")])
    out = capsys.readouterr().out
    assert code == 3
    assert out.startswith("FAIL:") and re.search(r"round (4|5)\b", out)


def test_verify_reordered_round_fails(out_dir, tmp_path, capsys):
    text = (out_dir / "pattern.txt").read_text()
    g = CrochetGraph.load(out_dir / "graph.json")

    def rotate(body):
        from amigo.pattern import fold_round, parse_items, unfold

        trace = unfold(parse_items(body))
        k = next(i for i, s in enumerate(trace) if s.kind != trace[0].kind)
        trace = trace[k:] + trace[:k]
        return ", ".join(str(it) for it in fold_round(trace))

    # the first round after the magic ring that mixes stitch kinds
    lines = [ln for ln in text.splitlines() if re.match(r"Rnd \d+: ", ln)]
    target = next(
        int(ln.split()[1][:-1]) for ln in lines[1:] if len(set(re.findall(r"[a-z]+", ln.split(":", 1)[1]))) > 1
    )
    bad = tmp_path / "bad.txt"
    bad.write_text(_edit_round(text, target, rotate))
    code = main(["verify", str(bad), str(out_dir / "graph.json")])
    out = capsys.readouterr().out
    assert code == 3
    assert f"round {target}" in out
    assert g.n_vertices > 0


def test_stats_json(out_dir, capsys):
    assert main(["stats", str(out_dir / "graph.json"), "--json"]) == 0
    st = json.loads(capsys.readouterr().out)
    g = CrochetGraph.load(out_dir / "graph.json")
    assert st["stitches"] == sum(g.rounds())
    assert st["rows"] == len(g.rounds())


def test_stats_table(out_dir, capsys):
    assert main(["stats", str(out_dir / "graph.json")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["model", "rows", "segments", "stitches"]
    assert out[2].startswith("stitches per round:")


def test_embed_command(out_dir, tmp_path):
    obj, ply = tmp_path / "e.obj", tmp_path / "e.ply"
    assert main(["embed", str(out_dir / "graph.json"), "-o", str(obj), "--ply", str(ply)]) == 0
    assert obj.read_bytes() == (out_dir / "embedding.obj").read_bytes()
    assert ply.read_text().startswith("ply\n")


def test_embed_bad_graph_exit_2(tmp_path):
    bad = tmp_path / "g.json"
    bad.write_text("{}")
    assert main(["embed", str(bad), "-o", str(tmp_path / "e.obj")]) == 2


def test_verify_syntax_error_exit_2(out_dir, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("AmiGo crochet pattern\n\nSegment 0\nRnd 1: MR 6\nRnd 2: 6hdc\n")
    assert main(["verify", str(bad), str(out_dir / "graph.json")]) == 2
