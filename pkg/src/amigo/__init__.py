"""Compile closed triangle meshes into amigurumi crochet patterns."""

from .errors import AmigoError
from .graph import CrochetGraph, build_graph, validate_graph
from .mesh import TriangleMesh, load_mesh
from .pattern import fold_pattern, interpret_pattern, parse_pattern, render_pattern
from .pipeline import PipelineConfig, compile_mesh, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AmigoError",
    "CrochetGraph",
    "PipelineConfig",
    "TriangleMesh",
    "build_graph",
    "compile_mesh",
    "fold_pattern",
    "interpret_pattern",
    "load_mesh",
    "parse_pattern",
    "render_pattern",
    "run_pipeline",
    "validate_graph",
]
