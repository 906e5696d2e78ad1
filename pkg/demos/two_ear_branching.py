"""A body with two ears: saddle slicing, joint rows and the verify loop.

    python3 demos/two_ear_branching.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from amigo import shapes
from amigo.pattern import compare_graphs, graph_connectivity, interpret_pattern, parse_pattern
from amigo.pipeline import compile_mesh, write_outputs

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_two_ear")

mesh = shapes.two_ear_sphere()
res = compile_mesh(mesh, int(np.argmin(mesh.vertices[:, 2])), 0.05, embed=False)

for sid in res.dag.order:
    s = res.dag.segments[sid]
    print(f"segment {sid}: {len(s.faces)} faces, f in [{s.f_lo:.3f}, {s.f_hi:.3f}], parents {s.parents}")

for s in res.graph.active():
    if s.parents:
        print(f"segment {s.id} joins onto {len(s.joint_row)} stitches of segment {s.parents[0]}")

diffs = compare_graphs(interpret_pattern(parse_pattern(res.text)), graph_connectivity(res.graph))
print("pattern re-executes to the same graph:", not diffs)

files = write_outputs(res, out, debug_exports=True)
print("wrote", ", ".join(sorted(str(p) for p in files.values())))
