import pytest

from sgfemopt import analysis, build_problem, build_uniform_mesh, make_interface


@pytest.fixture(scope="session")
def circle():
    return make_interface("circle", 0.5)


def space_for(kind, N, r0=0.5):
    ifc = make_interface(kind, r0) if kind == "circle" else make_interface(kind)
    return analysis.space_for(ifc, N)


@pytest.fixture(scope="session")
def circle_space_8():
    return space_for("circle", 8)


@pytest.fixture(scope="session")
def circle_space_16():
    return space_for("circle", 16)


@pytest.fixture(scope="session")
def circle_space_32():
    return space_for("circle", 32)


@pytest.fixture(scope="session")
def mesh8():
    return build_uniform_mesh(8)


@pytest.fixture(scope="session")
def ex1_problem():
    return build_problem("ex1", 1.0, 10.0)
