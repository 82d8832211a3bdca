import numpy as np
import pytest

from quadcurl.assembly import assemble_matrices, assemble_system, mesh_groups
from quadcurl.fields import example_solution
from quadcurl.mesh import build_cube_mesh


@pytest.fixture(scope="session")
def mesh1():
    return build_cube_mesh(1)


@pytest.fixture(scope="session")
def mesh2():
    return build_cube_mesh(2)


@pytest.fixture(scope="session")
def level2():
    """Assembled N=2, k=1 data shared by the assembly and solver tests."""
    mesh = build_cube_mesh(2)
    dofmap, groups = mesh_groups(mesh, 1)
    mats = assemble_matrices(mesh, 1, groups, dofmap)
    return mesh, dofmap, groups, mats


@pytest.fixture(scope="session")
def system2(level2):
    mesh, dofmap, groups, mats = level2
    return assemble_system(mesh, 1, example_solution(1), groups=groups, dofmap=dofmap,
                           matrices=mats)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
