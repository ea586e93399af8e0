import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from helpers import pedigree_evidence, pedigree_network  # noqa: E402

from beliefprop.jtree import JunctionTree, assign_clusters  # noqa: E402

FIXTURES = pathlib.Path(__file__).parent.parent / "fixtures"

# hand-built seven-cluster tree for the pedigree; cluster 0 is the
# conventional root in tests that need one
PED_CLUSTERS = (
    frozenset({0, 1, 2, 3}),
    frozenset({2, 3, 8}),
    frozenset({3, 5, 8}),
    frozenset({2, 6, 8}),
    frozenset({6, 8, 9}),
    frozenset({2, 4, 6}),
    frozenset({2, 4, 7}),
)
PED_EDGES = ((0, 1), (1, 2), (1, 3), (3, 4), (3, 5), (5, 6))
PED_ASSIGNMENT = {0: 0, 1: 0, 2: 0, 3: 0, 4: 5, 5: 2, 6: 5, 7: 6, 8: 2, 9: 4}


@pytest.fixture(scope="session")
def ped_net():
    return pedigree_network()


@pytest.fixture(scope="session")
def ped_ev():
    return pedigree_evidence()


@pytest.fixture(scope="session")
def ped_jtree(ped_net):
    jt = JunctionTree(PED_CLUSTERS, PED_EDGES)
    assignment = assign_clusters(ped_net, jt)
    assert assignment == PED_ASSIGNMENT
    return JunctionTree(PED_CLUSTERS, PED_EDGES, assignment)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
