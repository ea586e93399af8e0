"""Dense non-negative tables over sets of discrete variables.

A factor represents a function f(x_scope) = values[x] * exp(log_scale).
The scope is a strictly ascending tuple of integer variable ids and the
table carries one axis per scope entry, with the last scope variable
varying fastest in the flat (C-order) layout.  Keeping a separate
log-domain scale lets long chains of products stay inside double range
without switching the tables themselves to log space.

All operations are pure: they validate their inputs and return new
factors, never mutating the operands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

# Hard ceiling on the number of variables a single table may span.
# Dense tables grow exponentially in the scope size; 25 binary variables
# is already a 256 MB table, so anything larger is almost certainly a
# mistake in how the caller decomposed the problem.
DEFAULT_SCOPE_CAP = 25


class FactorSizeError(ValueError):
    """An operation would materialize a table over too many variables."""


class FactorDivisionError(ValueError):
    """A positive entry was divided by a zero entry.

    Division is only used to undo a multiplication (messages, cluster
    conditionals), where the denominator must dominate the numerator's
    support.  A positive/zero entry therefore signals an upstream bug,
    not a numerical accident, and deserves a loud failure.
    """


class ZeroMassError(ValueError):
    """Normalization was requested for a factor with zero total mass."""


def _merged_scope(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(set(a) | set(b)))


def _alignment_index(sub: tuple[int, ...], full: tuple[int, ...]) -> tuple:
    """Index expression that views a table over `sub` inside scope `full`."""
    members = set(sub)
    return tuple(slice(None) if u in members else None for u in full)


@dataclass(frozen=True)
class Factor:
    """Immutable table over ``scope`` scaled by ``exp(log_scale)``.

    A factor with empty scope is a scalar (0-d table).  Values must be
    finite and non-negative; the scale must be finite.
    """

    scope: tuple[int, ...]
    values: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self) -> None:
        scope = tuple(int(u) for u in self.scope)
        if list(scope) != sorted(set(scope)):
            raise ValueError(f"scope must be strictly ascending, got {scope!r}")
        # not ascontiguousarray: that call promotes 0-d tables to 1-d
        values = np.asarray(self.values, dtype=float)
        if values.ndim != len(scope):
            raise ValueError(
                f"table has {values.ndim} axes but scope lists {len(scope)} variables"
            )
        if not values.flags.c_contiguous:
            values = np.ascontiguousarray(values)
        if not np.all(np.isfinite(values)):
            raise ValueError("factor values must be finite")
        if np.any(values < 0):
            raise ValueError("factor values must be non-negative")
        if not math.isfinite(self.log_scale):
            raise ValueError("log_scale must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "log_scale", float(self.log_scale))

    # -- introspection -------------------------------------------------

    @classmethod
    def unit(cls) -> "Factor":
        """The scalar 1, the identity of multiplication."""
        return cls((), np.array(1.0))

    def card(self, u: int) -> int:
        return self.values.shape[self.scope.index(u)]

    @property
    def cards(self) -> dict[int, int]:
        return {u: d for u, d in zip(self.scope, self.values.shape)}

    def linear(self) -> np.ndarray:
        """The represented table with the scale folded back in."""
        return self.values * math.exp(self.log_scale)

    def total_log_mass(self) -> float:
        """log of the summed table mass, -inf when the table is all zero."""
        total = float(self.values.sum())
        if total <= 0.0:
            return float("-inf")
        return math.log(total) + self.log_scale

    # -- algebra -------------------------------------------------------

    def multiply(self, other: "Factor", max_scope: int = DEFAULT_SCOPE_CAP) -> "Factor":
        """Pointwise product over the union scope (scales add)."""
        scope = _merged_scope(self.scope, other.scope)
        if len(scope) > max_scope:
            raise FactorSizeError(
                f"product scope has {len(scope)} variables, cap is {max_scope}"
            )
        for u in set(self.scope) & set(other.scope):
            if self.card(u) != other.card(u):
                raise ValueError(
                    f"cardinality mismatch for variable {u}: "
                    f"{self.card(u)} vs {other.card(u)}"
                )
        a = self.values[_alignment_index(self.scope, scope)]
        b = other.values[_alignment_index(other.scope, scope)]
        return Factor(scope, a * b, self.log_scale + other.log_scale)

    def __mul__(self, other: "Factor") -> "Factor":
        return self.multiply(other)

    def marginalize_sum(self, drop: Iterable[int]) -> "Factor":
        """Sum out the listed variables."""
        return self._marginalize(drop, np.sum)

    def marginalize_max(self, drop: Iterable[int]) -> "Factor":
        """Maximize out the listed variables."""
        return self._marginalize(drop, np.max)

    def _marginalize(self, drop: Iterable[int], reducer) -> "Factor":
        dropped = set(int(u) for u in drop)
        unknown = dropped - set(self.scope)
        if unknown:
            raise ValueError(f"cannot marginalize variables not in scope: {sorted(unknown)}")
        if not dropped:
            return self
        axes = tuple(i for i, u in enumerate(self.scope) if u in dropped)
        kept = tuple(u for u in self.scope if u not in dropped)
        return Factor(kept, reducer(self.values, axis=axes), self.log_scale)

    def restrict(self, allowed: Mapping[int, Iterable[int]]) -> "Factor":
        """Zero out entries whose states fall outside the allowed sets.

        ``allowed`` maps variable id to the kept state indices; variables
        absent from the map are untouched, as are map entries for
        variables outside this factor's scope.  Re-applying the same
        restriction is an exact no-op.
        """
        values = self.values
        touched = False
        for pos, u in enumerate(self.scope):
            if u not in allowed:
                continue
            keep = sorted(int(s) for s in allowed[u])
            card = self.values.shape[pos]
            if any(s < 0 or s >= card for s in keep):
                raise ValueError(f"state index out of range for variable {u}: {keep}")
            mask = np.zeros(card)
            mask[keep] = 1.0
            shape = [1] * self.values.ndim
            shape[pos] = card
            values = values * mask.reshape(shape)
            touched = True
        if not touched:
            return self
        return Factor(self.scope, values, self.log_scale)

    def divide(self, other: "Factor") -> "Factor":
        """Pointwise quotient with the 0/0 := 0 convention.

        The divisor's scope must be contained in this factor's scope.
        A positive entry over a zero divisor raises FactorDivisionError.
        """
        if not set(other.scope) <= set(self.scope):
            raise ValueError(
                f"divisor scope {other.scope} is not contained in {self.scope}"
            )
        for u in other.scope:
            if self.card(u) != other.card(u):
                raise ValueError(f"cardinality mismatch for variable {u}")
        den = np.broadcast_to(
            other.values[_alignment_index(other.scope, self.scope)], self.values.shape
        )
        zero_den = den == 0.0
        if np.any(zero_den & (self.values > 0.0)):
            raise FactorDivisionError(
                "positive entry divided by zero (support of the divisor "
                "does not cover the dividend)"
            )
        out = np.divide(self.values, den, out=np.zeros_like(self.values), where=~zero_den)
        return Factor(self.scope, out, self.log_scale - other.log_scale)

    def normalize(self) -> tuple["Factor", float]:
        """Scale to total mass one.

        Returns the normalized factor (log_scale reset to 0) and the log
        of the removed mass, i.e. log(sum) + log_scale of the input.
        """
        total = float(self.values.sum())
        if total <= 0.0:
            raise ZeroMassError("cannot normalize a zero-mass factor")
        return Factor(self.scope, self.values / total, 0.0), math.log(total) + self.log_scale

    def expand(self, scope: Iterable[int], cards: Mapping[int, int]) -> "Factor":
        """Broadcast to a superset scope; new variables index uniformly."""
        target = tuple(sorted(int(u) for u in scope))
        if not set(self.scope) <= set(target):
            raise ValueError(f"target scope {target} does not contain {self.scope}")
        if target == self.scope:
            return self
        shape = tuple(
            self.card(u) if u in self.scope else int(cards[u]) for u in target
        )
        view = self.values[_alignment_index(self.scope, target)]
        return Factor(target, np.broadcast_to(view, shape), self.log_scale)

    def rescaled_unit_max(self) -> "Factor":
        """Divide by the largest entry, folding it into the scale.

        A zero factor is returned unchanged; its mass cannot be recovered
        by scaling and downstream code handles the zero case explicitly.
        """
        peak = float(self.values.max()) if self.values.size else 0.0
        if peak <= 0.0 or peak == 1.0:
            return self
        return Factor(self.scope, self.values / peak, self.log_scale + math.log(peak))


def product(factors: Iterable[Factor], max_scope: int = DEFAULT_SCOPE_CAP) -> Factor:
    """Multiply a sequence of factors; the empty product is the scalar 1."""
    out = Factor.unit()
    for f in factors:
        out = out.multiply(f, max_scope=max_scope)
    return out
