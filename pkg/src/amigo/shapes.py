"""Procedural closed test models (spheres, torus, revolution solids, ears)."""

import numpy as np

from .mesh import TriangleMesh


def tetrahedron(edge=1.0):
    v = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    ) * (edge / (2 * np.sqrt(2)))
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh.from_arrays(v, f, name="tetrahedron")


def _icosahedron():
    # poles on the z axis so that a vertex sits at each pole
    z = 1 / np.sqrt(5)
    rxy = 2 / np.sqrt(5)
    v = [[0, 0, 1]]
    v += [[rxy * np.cos(2 * np.pi * k / 5), rxy * np.sin(2 * np.pi * k / 5), z] for k in range(5)]
    v += [
        [rxy * np.cos(2 * np.pi * (k + 0.5) / 5), rxy * np.sin(2 * np.pi * (k + 0.5) / 5), -z]
        for k in range(5)
    ]
    v += [[0, 0, -1]]
    f = []
    for k in range(5):
        a, b = 1 + k, 1 + (k + 1) % 5
        c, d = 6 + k, 6 + (k + 1) % 5
        f += [[0, a, b], [a, c, b], [b, c, d], [c, 11, d]]
    return np.array(v, dtype=float), np.array(f)


def icosphere(subdivisions=3, radius=1.0):
    """Geodesic sphere; subdivision n has 10*4**n + 2 vertices."""
    verts, faces = _icosahedron()
    verts = [tuple(p) for p in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                p = (np.array(verts[i]) + np.array(verts[j])) / 2
                verts.append(tuple(p / np.linalg.norm(p)))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces.tolist():
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new_faces)
    v = np.array(verts) * radius
    return TriangleMesh.from_arrays(v, faces, name=f"icosphere{subdivisions}")


def radial_sphere(radius_fn, subdivisions=4, name="radial"):
    """Star-shaped surface ``r(d) * d`` over the unit icosphere directions."""
    base = icosphere(subdivisions)
    d = base.vertices
    return TriangleMesh.from_arrays(d * radius_fn(d)[:, None], base.faces, name=name)


def _bump(d, axis, amplitude, width):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ang = np.arccos(np.clip(d @ axis, -1, 1))
    return amplitude * np.exp(-((ang / width) ** 2))


def dimpled_sphere(subdivisions=4, depth=0.15, width=0.3, axis=(1.0, 0.0, 0.0)):
    """Unit sphere with a pushed-in crater around ``axis``."""
    return radial_sphere(
        lambda d: 1.0 - _bump(d, axis, depth, width), subdivisions, name="dimpled"
    )


def noisy_sphere(subdivisions=3, amplitude=0.01, seed=0):
    rng = np.random.default_rng(seed)
    base = icosphere(subdivisions)
    r = 1.0 + amplitude * rng.uniform(-1, 1, base.n_vertices)
    return TriangleMesh.from_arrays(base.vertices * r[:, None], base.faces, name="noisy")


def two_ear_sphere(subdivisions=4, tilt=0.8, length=1.5, width=0.3):
    """Sphere with two protrusions leaning apart from the north pole."""
    ears = [(np.sin(tilt), 0.0, np.cos(tilt)), (-np.sin(tilt), 0.0, np.cos(tilt))]
    return radial_sphere(
        lambda d: 1.0 + sum(_bump(d, e, length, width) for e in ears),
        subdivisions,
        name="two_ear",
    )


def torus(major=1.0, minor=0.4, n_major=48, n_minor=24):
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = (major + minor * np.cos(vv)) * np.cos(uu)
    y = (major + minor * np.cos(vv)) * np.sin(uu)
    z = minor * np.sin(vv)
    verts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces += [[a, b, c], [a, c, d]]
    return TriangleMesh.from_arrays(verts, np.array(faces), name="torus")


def revolution(profile, n_theta=48, name="revolution"):
    """Closed surface of revolution about z.

    ``profile`` is an (N, 2) array of (r, z) running from the bottom pole
    (r = 0) to the top pole (r = 0).
    """
    profile = np.asarray(profile, dtype=float)
    rings = profile[1:-1]
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    verts = [[0.0, 0.0, profile[0, 1]]]
    for r, z in rings:
        verts += [[r * np.cos(t), r * np.sin(t), z] for t in theta]
    verts.append([0.0, 0.0, profile[-1, 1]])
    top = len(verts) - 1

    def vid(ring, k):
        return 1 + ring * n_theta + k % n_theta

    faces = [[0, vid(0, k + 1), vid(0, k)] for k in range(n_theta)]
    for ring in range(len(rings) - 1):
        for k in range(n_theta):
            a, b = vid(ring, k), vid(ring, k + 1)
            c, d = vid(ring + 1, k + 1), vid(ring + 1, k)
            faces += [[a, b, c], [a, c, d]]
    last = len(rings) - 1
    faces += [[top, vid(last, k), vid(last, k + 1)] for k in range(n_theta)]
    return TriangleMesh.from_arrays(np.array(verts), np.array(faces), name=name)


def _resample(curve, n):
    seg = np.linalg.norm(np.diff(curve, axis=0), axis=1)
    s = np.concatenate([[0], np.cumsum(seg)])
    t = np.linspace(0, s[-1], n)
    return np.column_stack([np.interp(t, s, curve[:, k]) for k in range(2)])


def capped_cylinder(radius=1.0, height=1.6, spacing=0.05, n_theta=96):
    """Cylinder with flat caps and sharp rims; the bottom pole is vertex 0."""
    nc = max(2, int(round(radius / spacing)))
    ns = max(2, int(round(height / spacing)))
    prof = [(radius * k / nc, 0.0) for k in range(nc + 1)]
    prof += [(radius, height * k / ns) for k in range(1, ns + 1)]
    prof += [(radius * k / nc, height) for k in range(nc - 1, -1, -1)]
    return revolution(prof, n_theta, name="capped_cylinder")


def _smax(a, b, k):
    h = np.maximum(k - np.abs(a - b), 0.0) / k
    return np.maximum(a, b) + h * h * k / 4


def dumbbell(radius=1.0, offset=0.8, blend=0.45, n_profile=120, n_theta=64):
    """Smoothed union of two overlapping spheres; the waist is saddle-shaped."""
    half = offset + radius
    t = np.linspace(0, 1, 6000)
    z = -half * np.cos(np.pi * t)
    r1 = np.sqrt(np.maximum(radius**2 - (z - offset) ** 2, 0.0))
    r2 = np.sqrt(np.maximum(radius**2 - (z + offset) ** 2, 0.0))
    # the blend only fills the crease; it must not lift the closed poles
    r = np.minimum(_smax(r1, r2, blend), np.maximum(r1, r2) + blend / 4)
    prof = _resample(np.column_stack([r, z]), n_profile)
    prof[0] = (0.0, -half)
    prof[-1] = (0.0, half)
    return revolution(prof, n_theta, name="dumbbell")


def flat_square(n=8):
    """Open unit square grid on z = 0 (test-only; not a closed mesh)."""
    xs = np.linspace(0, 1, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)])
    faces = []
    for i in range(n):
        for j in range(n):
            a = i * (n + 1) + j
            b = (i + 1) * (n + 1) + j
            faces += [[a, b, b + 1], [a, b + 1, a + 1]]
    return TriangleMesh(verts, np.array(faces), name="square")


def vertex_near(mesh, point):
    return int(np.argmin(np.linalg.norm(mesh.vertices - np.asarray(point), axis=1)))
