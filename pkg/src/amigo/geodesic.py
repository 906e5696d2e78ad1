"""Heat-method geodesic distance and piecewise-linear critical points."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import SolverFailure

TIE_EPS = 1e-12
MAX_DOUBLINGS = 10


@dataclass(eq=False)
class ScalarField:
    """Per-vertex scalar values on ``mesh``."""

    mesh: object
    values: np.ndarray
    seed: int = -1
    t: float = float("nan")

    def __len__(self):
        return len(self.values)

    @property
    def max(self):
        return float(self.values.max())

    def face_gradients(self):
        return self.mesh.face_gradient(self.values)


@dataclass
class CriticalPoints:
    minima: list
    saddles: list  # ascending field value
    maxima: list
    multiplicity: dict = field(default_factory=dict)

    def morse_sum(self):
        return len(self.minima) - sum(self.multiplicity.get(s, 1) for s in self.saddles) + len(
            self.maxima
        )

    def all(self):
        return sorted(set(self.minima) | set(self.saddles) | set(self.maxima))


def default_time(mesh):
    return mesh.mean_edge_length() ** 2


def _factor(matrix):
    try:
        return splinalg.factorized(matrix.tocsc())
    except RuntimeError as exc:  # singular factor
        raise SolverFailure(str(exc)) from exc


def heat_geodesic(mesh, seed, t=None):
    """Approximate geodesic distance from ``seed`` (Crane et al. heat method)."""
    if t is None:
        t = default_time(mesh)
    if t <= 0:
        raise ValueError("time parameter must be positive")
    n = mesh.n_vertices
    K = mesh.cotan_stiffness
    delta = np.zeros(n)
    delta[seed] = 1.0
    u = _factor(mesh.mass + t * K)(delta)
    if not np.all(np.isfinite(u)):
        raise SolverFailure("heat solve produced non-finite values")

    grad = mesh.face_gradient(u)
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    X = -grad / np.maximum(norm, 1e-300)

    # integrated divergence: sum over faces of area * <grad phi_i, X>
    div = np.zeros(n)
    contrib = mesh.face_areas[:, None] * np.einsum("fkd,fd->fk", mesh.gradient_basis, X)
    np.add.at(div, mesh.faces.ravel(), contrib.ravel())

    # K phi = div (K is the weak negative Laplacian); pin the seed to zero
    keep = np.ones(n, dtype=bool)
    keep[seed] = False
    Kr = K[keep][:, keep]
    phi = np.zeros(n)
    phi[keep] = _factor(Kr)(div[keep])
    if not np.all(np.isfinite(phi)):
        raise SolverFailure("Poisson solve produced non-finite values")
    phi = np.maximum(phi, 0.0)
    return ScalarField(mesh, phi, seed=seed, t=t)


def perturb_ties(values):
    return values + TIE_EPS * np.arange(len(values))


def classify_critical_points(field):
    """Classify vertices by sign changes of the field around each one-ring."""
    mesh = field.mesh
    f = perturb_ties(np.asarray(field.values, dtype=float))
    minima, saddles, maxima = [], [], []
    mult = {}
    for v, ring in enumerate(mesh.one_rings):
        d = f[ring] - f[v]
        pos = d > 0
        if pos.all():
            minima.append(v)
        elif not pos.any():
            maxima.append(v)
        else:
            changes = int(np.count_nonzero(pos != np.roll(pos, 1)))
            if changes >= 4:
                saddles.append(v)
                mult[v] = (changes - 2) // 2
    saddles.sort(key=lambda v: (f[v], v))
    return CriticalPoints(minima, saddles, maxima, mult)


def neighbouring_criticals(mesh, crit):
    """Pairs of critical vertices that are one-ring neighbours."""
    marked = set(crit.all())
    pairs = []
    for v in sorted(marked):
        for u in mesh.neighbors[v]:
            if u > v and int(u) in marked:
                pairs.append((v, int(u)))
    return pairs


@dataclass
class TunedField:
    field: ScalarField
    t: float
    criticals: CriticalPoints
    doublings: int
    clean: bool

    def __iter__(self):
        # allows ``field, t = tune_time_parameter(...)``
        return iter((self.field, self.t))


def tune_time_parameter(mesh, seed):
    """Double the heat time until no two critical vertices are adjacent."""
    t0 = default_time(mesh)
    best = None
    for k in range(MAX_DOUBLINGS + 1):
        t = t0 * 2**k
        fld = heat_geodesic(mesh, seed, t)
        crit = classify_critical_points(fld)
        bad = neighbouring_criticals(mesh, crit)
        if not bad:
            return TunedField(fld, t, crit, k, True)
        if best is None or len(bad) < best[0]:
            best = (len(bad), TunedField(fld, t, crit, k, False))
    warnings.warn(
        f"critical points still adjacent after {MAX_DOUBLINGS} doublings", RuntimeWarning
    )
    return best[1]
