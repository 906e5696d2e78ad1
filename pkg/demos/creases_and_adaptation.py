"""Loop modifiers at sharp rims and denser rows at a concave waist.

    python3 demos/creases_and_adaptation.py
"""

import numpy as np

from amigo import shapes
from amigo.pipeline import compile_mesh

cyl = shapes.capped_cylinder()
res = compile_mesh(cyl, int(np.argmin(cyl.vertices[:, 2])), 0.05, creases=True, embed=False)
print("capped cylinder with creases:")
for line in res.text.splitlines():
    if "BLO" in line or "FLO" in line:
        print("  " + line)

bell = shapes.dumbbell()
seed = int(np.argmin(bell.vertices[:, 2]))
for adaptive in (False, True):
    r = compile_mesh(bell, seed, 0.04, adaptive=adaptive, embed=False)
    z = r.mesh.vertices[:, 2]
    f_waist = np.median(r.field[np.abs(z) < 0.01])
    seg = r.graph.active()[0]
    k = int(np.argmin(np.abs(np.asarray(seg.levels) - f_waist)))
    print(f"dumbbell adaptive={adaptive}: waist row has {len(seg.rows[k])} stitches, {r.stats['stitches']} in total")
