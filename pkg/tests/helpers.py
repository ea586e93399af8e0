"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from beliefprop.model import Cpd, DiscreteNetwork, EvidenceSet, Variable

GENOTYPES = ("dd", "dD", "DD")

# Hardy-Weinberg prior with P(d) = 0.8
FOUNDER = np.array([0.64, 0.32, 0.04])

_PASS_D = {"dd": 1.0, "dD": 0.5, "DD": 0.0}


def _child_row(g1: str, g2: str) -> list[float]:
    p, q = _PASS_D[g1], _PASS_D[g2]
    return [p * q, p * (1 - q) + (1 - p) * q, (1 - p) * (1 - q)]


# 9 rows (second parent fastest) x 3 child states
MENDEL = np.array([_child_row(a, b) for a in GENOTYPES for b in GENOTYPES])

PEDIGREE_PARENTS = {
    2: (0, 1),   # X3 | X1, X2
    3: (0, 1),   # X4 | X1, X2
    6: (2, 4),   # X7 | X3, X5
    7: (2, 4),   # X8 | X3, X5
    8: (3, 5),   # X9 | X4, X6
    9: (6, 8),   # X10 | X7, X9
}


def pedigree_network() -> DiscreteNetwork:
    """Three-generation pedigree over a biallelic locus, X1..X10."""
    variables = [Variable(i, f"X{i + 1}", GENOTYPES) for i in range(10)]
    cpds = []
    for i in range(10):
        if i in PEDIGREE_PARENTS:
            cpds.append(Cpd(i, PEDIGREE_PARENTS[i], MENDEL))
        else:
            cpds.append(Cpd(i, (), FOUNDER.reshape(1, 3)))
    return DiscreteNetwork(variables, cpds)


def pedigree_evidence() -> EvidenceSet:
    # X7 not DD; X2, X4, X8, X10 observed DD
    return EvidenceSet(
        {6: frozenset({0, 1}), 1: frozenset({2}), 3: frozenset({2}),
         7: frozenset({2}), 9: frozenset({2})}
    )


def random_network(rng: np.random.Generator, max_vars: int = 8,
                   max_states: int = 3, max_parents: int = 3) -> DiscreteNetwork:
    """Random DAG with strictly positive CPD rows.

    Variable ids are not topologically sorted: parenthood follows a
    random permutation, so id order exercises the topological sort.
    """
    n = int(rng.integers(2, max_vars + 1))
    order = rng.permutation(n)
    variables = [
        Variable(i, f"V{i}", tuple(f"s{k}" for k in range(int(rng.integers(2, max_states + 1)))))
        for i in range(n)
    ]
    cpds = []
    for pos, i in enumerate(order):
        pool = list(order[:pos])
        rng.shuffle(pool)
        k = int(rng.integers(0, min(max_parents, len(pool)) + 1))
        parents = tuple(int(p) for p in pool[:k])
        rows = 1
        for p in parents:
            rows *= variables[p].card
        table = rng.random((rows, variables[i].card)) + 0.05
        table /= table.sum(axis=1, keepdims=True)
        cpds.append(Cpd(int(i), parents, table))
    return DiscreteNetwork(variables, sorted(cpds, key=lambda c: c.child))


def random_evidence(rng: np.random.Generator, net: DiscreteNetwork,
                    p_restrict: float = 0.4) -> EvidenceSet:
    allowed = {}
    for v in net.variables:
        if rng.random() < p_restrict:
            k = int(rng.integers(1, v.card + 1))
            picked = rng.choice(v.card, size=k, replace=False)
            allowed[v.id] = frozenset(int(s) for s in picked)
    return EvidenceSet(allowed)
