import pytest

from modiso import galois, groups, isograph

LEVEL7_J = galois.parse_rational("2268945/128")


@pytest.fixture(scope="session")
def lattice7():
    return groups.enumerate_subgroups_containing_minus_i(7)


@pytest.fixture(scope="session")
def g1():
    return galois.mod7_image("G1")


@pytest.fixture(scope="session")
def full7(lattice7, g1):
    return isograph.build_full_graph(lattice7, g1, j_invariant=LEVEL7_J)


@pytest.fixture(scope="session")
def quotient7(lattice7, g1):
    graph = isograph.build_quotient_graph(lattice7, g1, j_invariant=LEVEL7_J)
    return isograph.prune_riemann_roch(graph)
