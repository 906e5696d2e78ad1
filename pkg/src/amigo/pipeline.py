"""End-to-end compilation from a mesh file to pattern, graph and embedding."""

import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embed as _embed
from . import geodesic, graph as _graph, mesh as _mesh, param, pattern as _pattern, segmentation
from .errors import AmigoError, InvalidMesh

STAGES = (
    "mesh-core",
    "geodesic-field",
    "segmentation",
    "surface-param",
    "crochet-graph",
    "pattern-compiler",
    "shape-embedder",
)


class StageError(AmigoError):
    """An error raised inside a named pipeline stage."""

    def __init__(self, stage, cause, invalid_input=False):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self._invalid = invalid_input

    @property
    def invalid_input(self):
        if self._invalid or isinstance(self.cause, (InvalidMesh, OSError)):
            return True
        # a bad seed is reported by the first stage
        return self.stage == "mesh-core" and isinstance(self.cause, ValueError)


@dataclass
class PipelineConfig:
    mesh_path: str
    seed: object = 0  # vertex id or an (x, y, z) point in model units
    width: float = 0.05
    creases: bool = False
    smooth_craters: bool = True
    adaptive: bool = True
    debug_exports: bool = False
    output: str = "amigo_out"
    embed: bool = True

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("stitch width must be positive")


@dataclass
class PipelineResult:
    mesh: object
    field: object
    dag: object
    graph: object
    pattern: object
    text: str
    report: object
    embedding: object = None
    stats: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if exc is None or isinstance(exc, StageError):
            return False
        if isinstance(exc, (AmigoError, OSError, ValueError, np.linalg.LinAlgError)):
            raise StageError(self.name, exc) from exc
        return False


def resolve_seed(mesh, seed):
    """Vertex id from an id or a point (snapped to the nearest vertex)."""
    if isinstance(seed, str):
        parts = [p for p in seed.replace(" ", "").split(",") if p]
        seed = int(parts[0]) if len(parts) == 1 else tuple(float(p) for p in parts)
    if np.ndim(seed) == 0:
        sid = int(seed)
        if not 0 <= sid < mesh.n_vertices:
            raise ValueError(f"seed {sid} out of range for {mesh.n_vertices} vertices")
        return sid
    p = np.asarray(seed, dtype=float)
    if p.shape != (3,):
        raise ValueError("seed point must have three coordinates")
    return int(np.argmin(np.linalg.norm(mesh.vertices - p, axis=1)))


def gauge_to_width(mesh, gauge, height, axis=2):
    """Normalized stitch width for ``gauge`` stitches/cm and a toy ``height`` in cm.

    ``mesh`` must already be area-normalized; its extent along ``axis`` is
    taken to be ``height`` centimetres.
    """
    extent = float(np.ptp(mesh.vertices[:, axis]))
    return extent / (float(gauge) * float(height))


def compile_mesh(mesh, seed, width, *, creases=False, smooth_craters=True, adaptive=True, embed=True):
    """Run every stage on an in-memory mesh; returns a :class:`PipelineResult`."""
    t0 = time.perf_counter()
    with _Stage("mesh-core"):
        seed = resolve_seed(mesh, seed)
        mesh = _mesh.normalize_area(mesh)
        smoothed = False
        if smooth_craters:
            before = mesh
            mesh = _mesh.smooth_craters(mesh)
            smoothed = not np.array_equal(before.vertices, mesh.vertices)
        curv = _mesh.compute_curvatures(mesh) if (adaptive or creases) else None
    with _Stage("geodesic-field"):
        tuned = geodesic.tune_time_parameter(mesh, seed)
        f = tuned.field.values
    with _Stage("segmentation"):
        dag = segmentation.segment_at_saddles(mesh, f, tuned.criticals)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            dag = segmentation.filter_thin_segments(dag, width)
        notes = [str(c.message) for c in caught]
    with _Stage("surface-param"):
        fields = {"f": f}
        for s in dag.segments:
            if s.skipped:
                continue
            cut = param.cut_segment(mesh, s, f)
            target = param.curvature_target(mesh, cut.mesh_faces, f, curv, adaptive)
            g, _ = param.solve_column_function(cut, f[cut.to_mesh], target)
            fields[s.id] = (cut, g, target)
    with _Stage("crochet-graph"):
        g_ = _graph.build_graph(mesh, dag, fields, width, seed, mesh.name)
        g_.notes.extend(notes)
        _pattern.mark_creases(g_, mesh, curv, f, enabled=creases)
        report = _graph.validate_graph(g_)
    with _Stage("pattern-compiler"):
        pat = _pattern.fold_pattern(g_)
        text = _pattern.render_pattern(pat)
    state = None
    if embed:
        with _Stage("shape-embedder"):
            state = _embed.embed_graph(g_)
    stats = dict(g_.stats())
    stats.update(
        {
            "time_parameter": float(tuned.t),
            "time_doublings": int(tuned.doublings),
            "craters_smoothed": bool(smoothed),
            "graph_valid": bool(report.ok),
            "wall_time_s": round(time.perf_counter() - t0, 3),
        }
    )
    if state is not None:
        stats["embedding_iterations"] = int(state.iterations)
        stats["embedding_converged"] = bool(state.converged)
    res = PipelineResult(mesh, f, dag, g_, pat, text, report, state, stats)
    res.fields = fields
    return res


def write_outputs(result, out_dir, debug_exports=False):
    """Write pattern.txt, graph.json, embedding.obj and stats.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    files["pattern"] = out / "pattern.txt"
    files["pattern"].write_text(result.text)
    files["graph"] = out / "graph.json"
    result.graph.save(files["graph"])
    if result.embedding is not None:
        files["embedding"] = out / "embedding.obj"
        _embed.export_embedding(result.embedding, result.graph, files["embedding"])
    files["stats"] = out / "stats.json"
    files["stats"].write_text(json.dumps(result.stats, indent=2, sort_keys=True) + "\n")
    if debug_exports:
        files.update(_debug_exports(result, out))
    result.files = {k: str(v) for k, v in files.items()}
    return result.files


def _debug_exports(result, out):
    mesh, f = result.mesh, result.field
    files = {}
    span = max(np.ptp(f), 1e-12)
    shade = (f - f.min()) / span
    colors = np.column_stack([shade, 0.3 * np.ones_like(shade), 1 - shade])
    files["debug_field"] = out / "debug_field.obj"
    _mesh.save_obj(mesh, files["debug_field"], groups=result.dag.face_labels, colors=colors)
    for sid, val in result.fields.items():
        if sid == "f":
            continue
        cut, g = val[0], val[1]
        cm = _mesh.TriangleMesh(cut.vertices, cut.faces, name=f"{mesh.name}_segment{sid}")
        uv = np.column_stack([f[cut.to_mesh], g])
        key = f"debug_param_{sid}"
        files[key] = out / f"debug_param_segment{sid}.obj"
        _mesh.save_obj(cm, files[key], uv=uv)
    sample = _embed.EmbeddingState(result.graph.positions, 0, True)
    files["debug_samples"] = out / "debug_samples.obj"
    _embed.export_embedding(sample, result.graph, files["debug_samples"], surface=False)
    return files


def run_pipeline(config):
    """Load ``config.mesh_path``, compile it and write every artifact."""
    with _Stage("mesh-core"):
        mesh = _mesh.load_mesh(config.mesh_path)
    result = compile_mesh(
        mesh,
        config.seed,
        config.width,
        creases=config.creases,
        smooth_craters=config.smooth_craters,
        adaptive=config.adaptive,
        embed=config.embed,
    )
    write_outputs(result, config.output, config.debug_exports)
    return result
