"""Command-line entry point: ``amigo compile | embed | verify | stats``."""

import argparse
import json
import sys
from pathlib import Path

from . import embed as _embed
from . import mesh as _mesh
from .errors import AmigoError, PatternSyntaxError, StitchCountMismatch
from .graph import CrochetGraph
from .pattern import compare_graphs, first_mismatch_round, graph_connectivity, interpret_pattern, parse_pattern
from .pipeline import PipelineConfig, StageError, gauge_to_width, run_pipeline

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_STAGE = 0, 1, 2, 3

_BOOL = {"true": True, "yes": True, "on": True, "1": True, "false": False, "no": False, "off": False, "0": False}
# config key -> (argparse dest, converter)
_CONFIG_KEYS = {
    "seed": ("seed", str),
    "width": ("width", float),
    "creases": ("creases", lambda v: _BOOL[v.lower()]),
    "smooth_craters": ("smooth_craters", lambda v: _BOOL[v.lower()]),
    "adaptive": ("adaptive", lambda v: _BOOL[v.lower()]),
    "debug_exports": ("debug_exports", lambda v: _BOOL[v.lower()]),
    "output": ("output", str),
    "gauge": ("gauge", float),
    "height": ("height", float),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; strings may be quoted."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        dest, conv = _CONFIG_KEYS[key]
        try:
            out[dest] = conv(value.strip("\"'"))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value}") from exc
    return out


def build_parser():
    p = _Parser(prog="amigo", description="Compile triangle meshes into crochet patterns.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", help="mesh -> pattern, graph, embedding and stats")
    c.add_argument("mesh", help="closed triangle mesh (OBJ)")
    c.add_argument("--seed", help="seed vertex id or x,y,z point (snapped to the nearest vertex)")
    c.add_argument("--width", type=float, help="stitch width in area-normalized units")
    c.add_argument("--gauge", type=float, help="stitches per cm; with --height sets the width")
    c.add_argument("--height", type=float, help="finished height in cm along z")
    c.add_argument("--creases", action="store_true", default=None, help="emit BLO/FLO at creases")
    c.add_argument("--no-smooth-craters", dest="smooth_craters", action="store_false", default=None)
    c.add_argument("--no-adaptive", dest="adaptive", action="store_false", default=None)
    c.add_argument("--debug-exports", action="store_true", default=None)
    c.add_argument("--no-embed", dest="embed", action="store_false", default=True, help="skip the shape prediction")
    c.add_argument("-o", "--output", help="output directory")
    c.add_argument("--config", help="key = value file; command-line flags take precedence")

    e = sub.add_parser("embed", help="graph JSON -> OBJ of the predicted shape")
    e.add_argument("graph")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--ply", help="also write a PLY with segment colours")

    v = sub.add_parser("verify", help="check that a pattern reproduces a graph")
    v.add_argument("pattern")
    v.add_argument("graph")

    s = sub.add_parser("stats", help="summary table of a graph JSON")
    s.add_argument("graph")
    s.add_argument("--json", action="store_true")
    return p


def _compile(args):
    opts = {"seed": "0", "width": None, "creases": False, "smooth_craters": True, "adaptive": True,
            "debug_exports": False, "output": "amigo_out", "gauge": None, "height": None}
    if args.config:
        try:
            opts.update(read_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    width = opts["width"]
    if width is None:
        if opts["gauge"] is None or opts["height"] is None:
            raise UsageError("give --width, or both --gauge and --height")
        mesh = _mesh.normalize_area(_mesh.load_mesh(args.mesh))
        width = gauge_to_width(mesh, opts["gauge"], opts["height"])
    if not width > 0:
        raise UsageError("--width must be positive")
    cfg = PipelineConfig(
        mesh_path=args.mesh,
        seed=opts["seed"],
        width=width,
        creases=opts["creases"],
        smooth_craters=opts["smooth_craters"],
        adaptive=opts["adaptive"],
        debug_exports=opts["debug_exports"],
        output=opts["output"],
        embed=args.embed,
    )
    res = run_pipeline(cfg)
    st = res.stats
    print(f"rows {st['rows']}  segments {st['segments']}  stitches {st['stitches']}  time {st['wall_time_s']:.2f}s")
    if not res.report.ok:
        print(f"warning: {res.report}", file=sys.stderr)
    for path in res.files.values():
        print(path)
    return EXIT_OK


def _load_graph(path):
    try:
        return CrochetGraph.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise StageError("crochet-graph", exc, invalid_input=True) from exc


def _embed_cmd(args):
    graph = _load_graph(args.graph)
    try:
        state = _embed.embed_graph(graph)
        _embed.export_embedding(state, graph, args.output, ply_path=args.ply)
    except (AmigoError, OSError) as exc:
        raise StageError("shape-embedder", exc) from exc
    print(f"{args.output}: {graph.n_vertices} vertices, {state.iterations} iterations")
    return EXIT_OK


def _verify(args):
    graph = _load_graph(args.graph)
    try:
        pattern = parse_pattern(Path(args.pattern).read_text())
    except (OSError, PatternSyntaxError) as exc:
        raise StageError("pattern-compiler", exc, invalid_input=True) from exc
    try:
        built = interpret_pattern(pattern)
    except StitchCountMismatch as exc:
        print(f"FAIL: {exc}")
        return EXIT_STAGE
    diffs = compare_graphs(built, graph_connectivity(graph))
    if not diffs:
        print("PASS: graphs isomorphic")
        return EXIT_OK
    bad = first_mismatch_round(pattern, graph)
    where = f"round {bad}" if bad is not None else "join structure"
    print(f"FAIL: graphs differ at {where}: {diffs[0]}")
    return EXIT_STAGE


def _stats(args):
    graph = _load_graph(args.graph)
    st = graph.stats()
    if args.json:
        print(json.dumps(st, indent=2, sort_keys=True))
        return EXIT_OK
    counts = graph.rounds()
    print(f"{'model':<16}{'rows':>6}{'segments':>10}{'stitches':>10}")
    print(f"{st['model']:<16}{st['rows']:>6}{st['segments']:>10}{st['stitches']:>10}")
    print("stitches per round: " + " ".join(str(c) for c in counts))
    return EXIT_OK


COMMANDS = {"compile": _compile, "embed": _embed_cmd, "verify": _verify, "stats": _stats}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return EXIT_INPUT if exc.invalid_input else EXIT_STAGE
    except AmigoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
