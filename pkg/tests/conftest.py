import numpy as np
import pytest

from amigo import shapes
from amigo.pipeline import compile_mesh

# (factory, seed selector, stitch width)
MODELS = {
    "sphere": (lambda: shapes.icosphere(4), lambda m: int(np.argmin(m.vertices[:, 2])), 0.074),
    "capped_cylinder": (shapes.capped_cylinder, lambda m: int(np.argmin(m.vertices[:, 2])), 0.05),
    "two_ear": (shapes.two_ear_sphere, lambda m: int(np.argmin(m.vertices[:, 2])), 0.05),
    "torus": (shapes.torus, lambda m: int(np.argmin(m.vertices[:, 0])), 0.05),
    "dumbbell": (shapes.dumbbell, lambda m: int(np.argmin(m.vertices[:, 2])), 0.04),
}

_CACHE = {}


def compiled(name, **kw):
    """Pipeline result for a named test model (cached per option set)."""
    key = (name, tuple(sorted(kw.items())))
    if key not in _CACHE:
        make, seed, w = MODELS[name]
        mesh = make()
        opts = {"embed": False}
        opts.update(kw)
        _CACHE[key] = compile_mesh(mesh, seed(mesh), opts.pop("width", w), **opts)
    return _CACHE[key]


@pytest.fixture(scope="session")
def sphere_result():
    return compiled("sphere")


@pytest.fixture(scope="session")
def two_ear_result():
    return compiled("two_ear")


def pole_seed(mesh):
    return int(np.argmin(mesh.vertices[:, 2]))


# criterion number -> PASS/FAIL line, filled by the acceptance tests
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
