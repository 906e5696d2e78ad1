"""Compile a sphere stage by stage and print what each stage produced.

    python3 demos/sphere_walkthrough.py [width]
"""

import sys

import numpy as np

from amigo import shapes
from amigo.geodesic import ScalarField, classify_critical_points
from amigo.pipeline import compile_mesh

width = float(sys.argv[1]) if len(sys.argv) > 1 else 0.074

mesh = shapes.icosphere(4)
seed = int(np.argmin(mesh.vertices[:, 2]))
res = compile_mesh(mesh, seed, width, embed=True)

r = 1 / (2 * np.sqrt(np.pi))
crit = classify_critical_points(ScalarField(res.mesh, res.field))
print(f"mesh: {res.mesh.n_vertices} vertices, area {res.mesh.area():.6f}")
print(f"field: max {res.field.max():.4f} (half circumference {np.pi * r:.4f}), "
      f"{len(crit.minima)} min / {len(crit.saddles)} saddles / {len(crit.maxima)} max")
print(f"segments: {len(res.dag)}")

seg = res.graph.active()[0]
print("\nrow  level   stitches  analytic")
for i, (ids, level) in enumerate(zip(seg.rows, seg.levels)):
    expect = 2 * np.pi * r * np.sin(level / r) / width
    print(f"{i:>3}  {level:6.3f}  {len(ids):>8}  {expect:8.2f}")

print(f"\nembedding: {res.embedding.iterations} iterations, converged={res.embedding.converged}")
print("\n" + res.text)
