import numpy as np
import pytest

from cosserat_fv.mesh import Mesh, compute_geometry, generate_structured
from cosserat_fv.verify import TWO_TRIANGLE_CELLS, TWO_TRIANGLE_VERTICES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_triangles():
    return Mesh.from_cells(TWO_TRIANGLE_VERTICES, TWO_TRIANGLE_CELLS)


@pytest.fixture(params=["uniform", "crisscross", "interface_half", "acute"])
def family_mesh(request):
    mesh = generate_structured(4, request.param)
    return mesh, compute_geometry(mesh)


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = {}
    request.config._acceptance_lines = lines
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
