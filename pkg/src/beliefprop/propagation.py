"""Message passing on a junction tree.

Evidence is folded into per-variable potentials (CPD times indicator),
each cluster multiplies the potentials of the variables assigned to it,
and messages flow along tree edges: the message from j to k is the
cluster potential of j times all incoming messages except k's, with the
non-separator variables summed out.  After an inward pass to a root and
an outward pass back, every cluster and edge holds an unnormalized
marginal whose total mass is the evidence probability.

Messages are renormalized to unit maximum by default, with the removed
mass tracked in each factor's log scale, so long chains cannot
underflow.  Both passes are iterative (explicit stacks), so tree depth
is not limited by the interpreter's recursion limit.

The same schedule run in the max-sum semiring yields most-probable
assignments: maximize instead of marginalize, then extend the root's
argmax downward edge by edge.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from .factor import Factor, product
from .jtree import (
    InvalidJunctionTreeError,
    JunctionTree,
    assign_clusters,
    build_junction_tree,
    validate_junction_tree,
)
from .model import (
    DiscreteNetwork,
    EvidenceSet,
    InvalidNetworkError,
    validate_network,
)


class SchedulingError(RuntimeError):
    """A message was requested before its prerequisites were computed."""


class ImpossibleEvidenceError(ValueError):
    """A conditional quantity was requested under zero-probability evidence."""


def build_potentials(net: DiscreteNetwork, evidence: EvidenceSet) -> dict[int, Factor]:
    """One factor per variable: its CPD with the child's disallowed states
    zeroed.

    Each variable's indicator is applied exactly once, in its own
    potential, never where the variable appears as a parent.  Products
    over sets of potentials therefore carry each restriction once, and
    a single potential restricted this way still matches the message
    definitions entry for entry.
    """
    out: dict[int, Factor] = {}
    for u in net.ids:
        factor = net.cpd_factor(u)
        if evidence.restricts(u):
            factor = factor.restrict({u: evidence.allowed[u]})
        out[u] = factor
    return out


def joint_score(net: DiscreteNetwork, evidence: EvidenceSet, assignment: Mapping[int, int]) -> float:
    """Probability of one full assignment times the evidence indicator.

    Multiplies CPD entries in ascending variable order; used to score
    candidate most-probable assignments on a common footing.
    """
    score = 1.0
    for u in sorted(net.ids):
        state = assignment[u]
        if not evidence.permits(u, state):
            return 0.0
        cpd = net.cpd(u)
        row = 0
        for p in cpd.parents:
            row = row * net.card(p) + assignment[p]
        score *= float(cpd.table[row, state])
    return score


class CompiledQuery:
    """A network, evidence, and junction tree wired up for propagation.

    The two message stores (sum and max semiring) start empty; inward()
    and outward() fill them following the tree rooted at ``root``.
    Marginal accessors require the messages they read to exist and raise
    SchedulingError otherwise.
    """

    def __init__(
        self,
        net: DiscreteNetwork,
        evidence: EvidenceSet | None = None,
        jtree: JunctionTree | None = None,
        root: int = 0,
        renormalize: bool = True,
        validate: bool = True,
    ):
        self.net = net
        self.evidence = evidence if evidence is not None else EvidenceSet.none()
        if validate:
            report = validate_network(net)
            if not report.ok:
                raise InvalidNetworkError(report)
        if jtree is None:
            jtree = build_junction_tree(net)
        if validate:
            report = validate_junction_tree(net, jtree)
            if not report.ok:
                raise InvalidJunctionTreeError(report)
        if jtree.assignment is None:
            jtree = JunctionTree(jtree.clusters, jtree.edges, assign_clusters(net, jtree))
        self.jtree = jtree
        if not (0 <= root < jtree.q):
            raise ValueError(f"root cluster {root} out of range")
        self.root = root
        self.renormalize = renormalize
        self.potentials = build_potentials(net, self.evidence)
        self.cluster_potentials: list[Factor] = [
            product(
                self.potentials[u]
                for u in sorted(u for u, j in jtree.assignment.items() if j == c)
            )
            for c in range(jtree.q)
        ]
        self._messages: dict[tuple[str, int, int], Factor] = {}

    # -- schedule ----------------------------------------------------------

    def rooted_children(self, root: int) -> tuple[dict[int, tuple[int, ...]], list[int]]:
        """Children map and a parent-before-child cluster order."""
        children: dict[int, tuple[int, ...]] = {}
        order: list[int] = []
        seen = {root}
        stack = [root]
        while stack:
            j = stack.pop()
            order.append(j)
            kids = tuple(k for k in self.jtree.neighbors(j) if k not in seen)
            children[j] = kids
            seen.update(kids)
            # reversed so the lowest-index child is processed first
            stack.extend(reversed(kids))
        return children, order

    def inward(self, root: int | None = None, semiring: str = "sum") -> None:
        """Send messages from the leaves toward the root."""
        root = self.root if root is None else root
        children, order = self.rooted_children(root)
        parents = {c: p for p, kids in children.items() for c in kids}
        for j in reversed(order):
            if j != root:
                self.compute_message(j, parents[j], semiring=semiring)

    def outward(self, root: int | None = None, semiring: str = "sum") -> None:
        """Send messages from the root back toward the leaves."""
        root = self.root if root is None else root
        children, order = self.rooted_children(root)
        for j in order:
            for k in children[j]:
                self.compute_message(j, k, semiring=semiring)

    def propagate(self, semiring: str = "sum") -> "CompiledQuery":
        self.inward(semiring=semiring)
        self.outward(semiring=semiring)
        return self

    # -- messages ----------------------------------------------------------

    def has_message(self, i: int, j: int, semiring: str = "sum") -> bool:
        return (semiring, i, j) in self._messages

    def message(self, i: int, j: int, semiring: str = "sum") -> Factor:
        try:
            return self._messages[(semiring, i, j)]
        except KeyError:
            raise SchedulingError(
                f"message {i} -> {j} ({semiring}) has not been computed"
            ) from None

    def compute_message(self, j: int, k: int, semiring: str = "sum") -> Factor:
        """Message along the directed edge j -> k.

        Multiplies the cluster potential of j with every incoming message
        except the one from k, then sums (or maximizes) out everything
        outside the separator.  The result's scope is exactly the
        separator, broadcasting over separator variables that no factor
        mentions.
        """
        if semiring not in ("sum", "max"):
            raise ValueError(f"unknown semiring {semiring!r}")
        sep = sorted(self.jtree.separator(j, k))
        pieces = [self.cluster_potentials[j]]
        for i in self.jtree.neighbors(j):
            if i == k:
                continue
            if not self.has_message(i, j, semiring):
                raise SchedulingError(
                    f"message {j} -> {k} needs message {i} -> {j} first"
                )
            pieces.append(self.message(i, j, semiring))
        prod = product(pieces)
        drop = set(prod.scope) - set(sep)
        if semiring == "sum":
            msg = prod.marginalize_sum(drop)
        else:
            msg = prod.marginalize_max(drop)
        msg = msg.expand(sep, self.net.cards)
        if self.renormalize:
            msg = msg.rescaled_unit_max()
        self._messages[(semiring, j, k)] = msg
        return msg

    # -- marginals ---------------------------------------------------------

    def edge_marginal(self, i: int, j: int) -> Factor:
        """Unnormalized P(separator, evidence) from the two edge messages."""
        return self.message(i, j) * self.message(j, i)

    def cluster_marginal(self, j: int) -> Factor:
        """Unnormalized P(cluster, evidence): potential times all inputs."""
        pieces = [self.cluster_potentials[j]]
        pieces.extend(self.message(i, j) for i in self.jtree.neighbors(j))
        scope = sorted(self.jtree.clusters[j])
        return product(pieces).expand(scope, self.net.cards)

    def evidence_log_probability(self) -> float:
        """log P(evidence); -inf when the evidence is impossible.

        Reads the root cluster marginal, so only the inward pass is
        required.
        """
        return self.cluster_marginal(self.root).total_log_mass()

    def variable_posterior(self, u: int) -> np.ndarray:
        """P(variable | evidence) read from the variable's home cluster."""
        j = self.jtree.assignment[u]
        marginal = self.cluster_marginal(j)
        single = marginal.marginalize_sum(set(marginal.scope) - {u})
        total = float(single.values.sum())
        if total <= 0.0:
            raise ImpossibleEvidenceError(
                "posterior undefined: evidence has probability zero"
            )
        return single.values / total

    def posterior_table(self) -> dict[int, np.ndarray]:
        return {u: self.variable_posterior(u) for u in sorted(self.net.ids)}

    # -- most probable assignment ------------------------------------------

    def max_cluster_marginal(self, j: int) -> Factor:
        pieces = [self.cluster_potentials[j]]
        pieces.extend(self.message(i, j, "max") for i in self.jtree.neighbors(j))
        scope = sorted(self.jtree.clusters[j])
        return product(pieces).expand(scope, self.net.cards)

    def map_assignment(self, root: int | None = None) -> tuple[dict[int, int], float]:
        """Most probable full assignment under the evidence.

        Returns the assignment and log P(assignment, evidence).  Ties are
        broken toward lower state indices (first maximum in the canonical
        table order at the root and at every downward extension).
        """
        root = self.root if root is None else root
        if not all(
            self.has_message(j, k, "max")
            for k, j in self._inward_edges(root)
        ):
            self.inward(root, semiring="max")
        children, order = self.rooted_children(root)
        marginal = self.max_cluster_marginal(root)
        peak = float(marginal.values.max())
        if peak <= 0.0:
            raise ImpossibleEvidenceError(
                "no assignment is consistent with the evidence"
            )
        log_value = math.log(peak) + marginal.log_scale
        assignment: dict[int, int] = {}
        flat = int(np.argmax(marginal.values))
        for u, s in zip(marginal.scope, np.unravel_index(flat, marginal.values.shape)):
            assignment[u] = int(s)
        for j in order:
            for k in children[j]:
                self._extend_map(j, k, assignment)
        return assignment, log_value

    def _inward_edges(self, root: int) -> list[tuple[int, int]]:
        children, order = self.rooted_children(root)
        return [(p, c) for p, kids in children.items() for c in kids]

    def _extend_map(self, parent: int, child: int, assignment: dict[int, int]) -> None:
        pieces = [self.cluster_potentials[child]]
        for i in self.jtree.neighbors(child):
            if i != parent:
                pieces.append(self.message(i, child, "max"))
        scope = sorted(self.jtree.clusters[child])
        table = product(pieces).expand(scope, self.net.cards)
        index = tuple(
            assignment[u] if u in assignment else slice(None) for u in table.scope
        )
        free = [u for u in table.scope if u not in assignment]
        if not free:
            return
        sub = table.values[index]
        flat = int(np.argmax(sub))
        for u, s in zip(free, np.unravel_index(flat, sub.shape)):
            assignment[u] = int(s)


def compile_query(
    net: DiscreteNetwork,
    evidence: EvidenceSet | None = None,
    jtree: JunctionTree | None = None,
    root: int = 0,
    renormalize: bool = True,
    validate: bool = True,
) -> CompiledQuery:
    """Build a CompiledQuery and run both sum-product passes."""
    cq = CompiledQuery(
        net, evidence, jtree=jtree, root=root, renormalize=renormalize, validate=validate
    )
    return cq.propagate()
