"""Discrete Bayesian network data model."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import NetworkError
from .factor import Factor

ROW_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        if len(states) < 2:
            raise NetworkError(f"variable {self.name!r} needs at least two states")
        if len(set(states)) != len(states):
            raise NetworkError(f"variable {self.name!r} has duplicate state labels")
        object.__setattr__(self, "states", states)

    @property
    def card(self) -> int:
        return len(self.states)


class Evidence(Mapping):
    """Immutable map from variable id to observed state index."""

    __slots__ = ("_data",)

    def __init__(self, assignments: Mapping[int, int] | None = None, **kwargs):
        data = dict(assignments or {})
        data.update(kwargs)
        self._data = {int(k): int(v) for k, v in data.items()}

    def __getitem__(self, key: int) -> int:
        return self._data[key]

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._data))

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self._data) == dict(other)
        return NotImplemented

    def __repr__(self):
        return f"Evidence({dict(sorted(self._data.items()))})"

    def validate(self, net: BayesianNetwork) -> None:
        for v, s in self._data.items():
            if not 0 <= v < net.n:
                raise NetworkError(f"evidence names unknown variable id {v}")
            if not 0 <= s < net.card(v):
                raise NetworkError(
                    f"state {s} out of range for variable {net.variables[v].name!r}"
                )

    def with_(self, var: int, state: int) -> Evidence:
        data = dict(self._data)
        data[int(var)] = int(state)
        return Evidence(data)


@dataclass(frozen=True, eq=False)
class BayesianNetwork:
    """A DAG of discrete variables, each with a CPT over ``parents + (child,)``."""

    variables: tuple[Variable, ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[Factor, ...]
    name: str = "network"
    _names: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        parents = tuple(tuple(int(p) for p in ps) for ps in self.parents)
        cpts = tuple(self.cpts)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "cpts", cpts)

        n = len(variables)
        if [v.id for v in variables] != list(range(n)):
            raise NetworkError("variable ids must be contiguous 0..n-1 in order")
        names = {v.name: v.id for v in variables}
        if len(names) != n:
            raise NetworkError("variable names must be unique")
        object.__setattr__(self, "_names", names)
        if len(parents) != n or len(cpts) != n:
            raise NetworkError("need one parent list and one CPT per variable")

        for x, (ps, cpt) in enumerate(zip(parents, cpts)):
            label = variables[x].name
            if len(set(ps)) != len(ps) or x in ps:
                raise NetworkError(f"bad parent list for {label!r}")
            if any(not 0 <= p < n for p in ps):
                raise NetworkError(f"unknown parent reference for {label!r}")
            if cpt.scope != ps + (x,):
                raise NetworkError(
                    f"CPT scope of {label!r} must be its parents followed by itself"
                )
            if cpt.cards != tuple(variables[v].card for v in cpt.scope):
                raise NetworkError(f"CPT shape of {label!r} does not match cardinalities")
            sums = cpt.table.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > ROW_TOLERANCE):
                raise NetworkError(f"CPT rows of {label!r} do not sum to 1")

        if len(self.topological_order) != n:
            raise NetworkError("parent graph contains a cycle")

    # structure --------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.variables)

    @cached_property
    def cards(self) -> tuple[int, ...]:
        return tuple(v.card for v in self.variables)

    def card(self, v: int) -> int:
        return self.variables[v].card

    def index(self, name: str) -> int:
        try:
            return self._names[name]
        except KeyError:
            raise NetworkError(f"unknown variable {name!r}") from None

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in range(self.n)]
        for x, ps in enumerate(self.parents):
            for p in ps:
                kids[p].append(x)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indegree = [len(ps) for ps in self.parents]
        kids: list[list[int]] = [[] for _ in range(len(self.parents))]
        for x, ps in enumerate(self.parents):
            for p in ps:
                if 0 <= p < len(kids):
                    kids[p].append(x)
        ready = [v for v, d in enumerate(indegree) if d == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in kids[v]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    ready.append(c)
        return tuple(order)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, x) for x, ps in enumerate(self.parents) for p in ps]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n) if not self.children[v]]

    def is_polytree(self) -> bool:
        """True when the undirected skeleton has no cycle."""
        root = list(range(self.n))

        def find(a):
            while root[a] != a:
                root[a] = root[root[a]]
                a = root[a]
            return a

        for p, x in self.edges():
            a, b = find(p), find(x)
            if a == b:
                return False
            root[a] = b
        return True

    # construction helpers -----------------------------------------------------

    def replace_cpt(self, child: int, parents: Sequence[int], table) -> BayesianNetwork:
        """Copy of this network with a new parent list and CPT for ``child``."""
        parents = tuple(int(p) for p in parents)
        new_parents = list(self.parents)
        new_cpts = list(self.cpts)
        new_parents[child] = parents
        new_cpts[child] = Factor(parents + (child,), table)
        return BayesianNetwork(self.variables, tuple(new_parents), tuple(new_cpts), self.name)

    def evidence(self, by_name: Mapping[str, str | int]) -> Evidence:
        """Build evidence from variable names and state labels (or indices)."""
        out = {}
        for name, state in by_name.items():
            v = self.index(name)
            states = self.variables[v].states
            if isinstance(state, str) and state in states:
                out[v] = states.index(state)
            elif isinstance(state, int) and not isinstance(state, bool) and 0 <= state < len(states):
                out[v] = state
            else:
                raise NetworkError(f"unknown state {state!r} for variable {name!r}")
        return Evidence(out)

    def same_structure(self, other: BayesianNetwork) -> bool:
        return self.variables == other.variables and self.parents == other.parents


def make_network(
    spec: Sequence[tuple[str, Sequence[str], Sequence[str], object]], name: str = "network"
) -> BayesianNetwork:
    """Build a network from ``(name, states, parent_names, table)`` tuples.

    Tables may be nested arrays or flat row-major lists. Parents must be
    declared before use.
    """
    variables = []
    ids: dict[str, int] = {}
    for i, (vname, states, _, _) in enumerate(spec):
        variables.append(Variable(i, vname, tuple(states)))
        ids[vname] = i
    parents = []
    cpts = []
    for i, (_, _, pnames, table) in enumerate(spec):
        ps = tuple(ids[p] for p in pnames)
        cards = [variables[p].card for p in ps] + [variables[i].card]
        parents.append(ps)
        cpts.append(Factor.from_flat(ps + (i,), cards, np.asarray(table, dtype=float).reshape(-1)))
    return BayesianNetwork(tuple(variables), tuple(parents), tuple(cpts), name)
