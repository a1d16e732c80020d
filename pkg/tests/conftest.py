import numpy as np
import pytest

from hct.derham import assemble_complex
from hct.generators import generate_mesh
from hct.mesh import mark_boundary


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def square():
    return generate_mesh("square-grid", {"n": 2})


@pytest.fixture(scope="session")
def annulus():
    return generate_mesh("square-hole", {"n": 3})


@pytest.fixture(scope="session")
def cube():
    return generate_mesh("cube-grid", {"n": 1})


@pytest.fixture(scope="session")
def tunnel():
    return generate_mesh("cube-tunnel", {"n": 3})


def none(mesh):
    return mark_boundary(mesh, lambda c: False)


def full(mesh):
    return mark_boundary(mesh, lambda c: True)


@pytest.fixture(scope="session")
def annulus_complex(annulus):
    return assemble_complex(annulus, none(annulus))


@pytest.fixture(scope="session")
def square_complex():
    mesh = generate_mesh("square-grid", {"n": 3})
    return assemble_complex(mesh, none(mesh))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
    passed = sum(" PASS " in line for line in results.values())
    terminalreporter.write_line(f"{passed}/{len(results)} criteria passed")
