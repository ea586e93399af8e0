"""Brute-force reference answers by full enumeration.

Everything here is computed straight from the definitions: multiply all
evidence-restricted CPDs into one table over every variable, then sum,
maximize, or slice it.  The only shared machinery is the factor algebra
and the model itself; none of the message-passing code is used, so the
two paths can check each other.

Enumeration is exponential, so table sizes are guarded: anything past
MAX_TABLE_ENTRIES joint states is refused.
"""

from __future__ import annotations

import numpy as np

from .factor import Factor, product
from .jtree import JunctionTree, edge_context
from .model import DiscreteNetwork, EvidenceSet

MAX_TABLE_ENTRIES = 10_000_000


class EnumerationSizeError(ValueError):
    """The requested table would exceed the enumeration guard."""


def _guard(net: DiscreteNetwork, variables) -> None:
    variables = list(variables)
    entries = 1
    for u in variables:
        entries *= net.card(u)
        if entries > MAX_TABLE_ENTRIES:
            raise EnumerationSizeError(
                f"joint table over {len(variables)} variables exceeds "
                f"{MAX_TABLE_ENTRIES} entries"
            )


def _potentials(net: DiscreteNetwork, evidence: EvidenceSet) -> dict[int, Factor]:
    # each variable's indicator applied once, on its own CPD only
    out: dict[int, Factor] = {}
    for u in net.ids:
        factor = net.cpd_factor(u)
        if evidence.restricts(u):
            factor = factor.restrict({u: evidence.allowed[u]})
        out[u] = factor
    return out


def joint_table(net: DiscreteNetwork, evidence: EvidenceSet) -> Factor:
    """Unnormalized P(all variables, evidence) as one dense factor."""
    ids = sorted(net.ids)
    _guard(net, ids)
    pots = _potentials(net, evidence)
    return product((pots[u] for u in ids), max_scope=len(ids)).expand(ids, net.cards)


def oracle_message(
    net: DiscreteNetwork, evidence: EvidenceSet, jt: JunctionTree, i: int, j: int
) -> Factor:
    """Message along i -> j computed literally from its definition:
    multiply the potentials of every variable assigned on the i side of
    the edge, then sum out those not in the separator."""
    ctx = edge_context(jt, i, j)
    scope_bound = sorted(ctx.upstream | ctx.separator)
    _guard(net, scope_bound)
    pots = _potentials(net, evidence)
    prod = product(
        (pots[u] for u in sorted(ctx.upstream)), max_scope=max(len(scope_bound), 1)
    )
    msg = prod.marginalize_sum(set(prod.scope) - ctx.separator)
    return msg.expand(sorted(ctx.separator), net.cards)


def oracle_marginal(net: DiscreteNetwork, evidence: EvidenceSet, keep) -> Factor:
    """Unnormalized P(kept variables, evidence) from the joint table."""
    keep = set(int(u) for u in keep)
    unknown = keep - set(net.ids)
    if unknown:
        raise KeyError(f"unknown variable ids {sorted(unknown)}")
    joint = joint_table(net, evidence)
    return joint.marginalize_sum(set(joint.scope) - keep)


def oracle_log_probability(net: DiscreteNetwork, evidence: EvidenceSet) -> float:
    """log P(evidence) by summing the whole joint table."""
    return joint_table(net, evidence).total_log_mass()


def oracle_posterior(net: DiscreteNetwork, evidence: EvidenceSet, u: int) -> np.ndarray:
    """P(u | evidence) by enumeration; evidence must be possible."""
    marginal = oracle_marginal(net, evidence, [u])
    total = float(marginal.values.sum())
    if total <= 0.0:
        raise ValueError("posterior undefined: evidence has probability zero")
    return marginal.values / total


def oracle_map(
    net: DiscreteNetwork, evidence: EvidenceSet
) -> tuple[dict[int, int], float]:
    """Most probable assignment by scanning the joint table.

    Returns the assignment and its unnormalized probability (linear
    scale).  Ties resolve to the first maximum in canonical table order,
    i.e. the lowest state indices.
    """
    joint = joint_table(net, evidence)
    flat = int(np.argmax(joint.values))
    states = np.unravel_index(flat, joint.values.shape)
    assignment = {u: int(s) for u, s in zip(joint.scope, states)}
    return assignment, float(joint.values[states]) * float(np.exp(joint.log_scale))
