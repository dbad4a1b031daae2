"""Dense factor tables over discrete variables.

A factor stores one axis per scope variable, so the flattened table is in
row-major order with the last scope variable varying fastest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class Factor:
    """Nonnegative table over an ordered scope of variable ids.

    The table is copied on construction and made read-only, so factors can
    be shared freely.
    """

    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        table = np.array(self.table, dtype=np.float64)
        if table.ndim != len(scope):
            raise ValueError(
                f"table has {table.ndim} axes but scope has {len(scope)} variables"
            )
        if len(set(scope)) != len(scope):
            raise ValueError(f"duplicate variable in scope {scope}")
        if not np.all(np.isfinite(table)):
            raise ValueError("factor entries must be finite")
        if np.any(table < 0):
            raise ValueError("factor entries must be nonnegative")
        table.flags.writeable = False
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_flat(cls, scope: Sequence[int], cards: Sequence[int], values) -> Factor:
        values = np.asarray(values, dtype=np.float64)
        expected = int(np.prod(cards, dtype=np.int64)) if len(cards) else 1
        if values.size != expected:
            raise ValueError(
                f"table length {values.size} does not match cardinalities {tuple(cards)}"
            )
        return cls(tuple(scope), values.reshape(tuple(cards)))

    @classmethod
    def scalar(cls, value: float) -> Factor:
        return cls((), np.asarray(float(value)))

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(self.table.shape)

    @property
    def size(self) -> int:
        return int(self.table.size)

    def card_map(self) -> dict[int, int]:
        return dict(zip(self.scope, self.table.shape))

    def flat(self) -> list[float]:
        return [float(x) for x in self.table.reshape(-1)]

    def __repr__(self):
        return f"Factor(scope={self.scope}, cards={self.cards})"

    def __mul__(self, other: Factor) -> Factor:
        return multiply(self, other)

    def aligned(self, scope: Sequence[int], cards: Mapping[int, int]) -> np.ndarray:
        """View of the table broadcastable against ``scope``.

        ``scope`` must contain every variable of this factor.
        """
        present = [v for v in scope if v in self.scope]
        if len(present) != len(self.scope):
            missing = set(self.scope) - set(scope)
            raise ValueError(f"target scope lacks variables {sorted(missing)}")
        axes = [self.scope.index(v) for v in present]
        t = np.transpose(self.table, axes)
        shape = [cards[v] if v in self.scope else 1 for v in scope]
        return t.reshape(shape)

    def transpose(self, scope: Sequence[int]) -> Factor:
        scope = tuple(scope)
        if sorted(scope) != sorted(self.scope):
            raise ValueError(f"{scope} is not a permutation of {self.scope}")
        return Factor(scope, np.transpose(self.table, [self.scope.index(v) for v in scope]))

    def sum_out(self, variables: Iterable[int]) -> Factor:
        drop = [v for v in variables if v in self.scope]
        if not drop:
            return self
        axes = tuple(self.scope.index(v) for v in drop)
        keep = tuple(v for v in self.scope if v not in drop)
        return Factor(keep, self.table.sum(axis=axes))

    def marginal(self, keep: Sequence[int]) -> Factor:
        """Sum out everything not in ``keep`` and order the result as ``keep``."""
        reduced = self.sum_out([v for v in self.scope if v not in keep])
        return reduced.transpose([v for v in keep if v in reduced.scope])

    def restrict(self, evidence: Mapping[int, int]) -> Factor:
        """Slice out the entries consistent with ``evidence``.

        Evidence variables leave the scope; variables outside the scope are
        ignored.
        """
        hits = [v for v in self.scope if v in evidence]
        if not hits:
            return self
        index = tuple(
            int(evidence[v]) if v in evidence else slice(None) for v in self.scope
        )
        keep = tuple(v for v in self.scope if v not in evidence)
        return Factor(keep, self.table[index])

    def normalize(self) -> Factor:
        total = self.table.sum()
        if total <= 0:
            raise ZeroDivisionError("cannot normalize a factor with zero mass")
        return Factor(self.scope, self.table / total)

    def scaled(self, value: float) -> Factor:
        return Factor(self.scope, self.table * value)

    def allclose(self, other: Factor, atol: float = 1e-12) -> bool:
        if sorted(self.scope) != sorted(other.scope):
            return False
        other = other.transpose(self.scope)
        return bool(np.allclose(self.table, other.table, rtol=0.0, atol=atol))


def multiply(a: Factor, b: Factor) -> Factor:
    scope = a.scope + tuple(v for v in b.scope if v not in a.scope)
    cards = a.card_map()
    for v, k in b.card_map().items():
        if cards.setdefault(v, k) != k:
            raise ValueError(f"cardinality mismatch on variable {v}")
    return Factor(scope, a.aligned(scope, cards) * b.aligned(scope, cards))


def multiply_all(factors: Iterable[Factor]) -> Factor:
    return reduce(multiply, factors, Factor.scalar(1.0))


def scope_size(scope: Iterable[int], cards: Sequence[int] | Mapping[int, int]) -> int:
    """Number of table entries over ``scope``."""
    n = 1
    for v in scope:
        n *= int(cards[v])
    return n
