"""Exact inference by bucket elimination.

Buckets are processed along an elimination order. The upward pass yields
Pr(e); a downward pass over the resulting bucket tree yields every
posterior marginal without re-running elimination per variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ImpossibleEvidenceError, ScaleGuardError
from .factor import Factor, multiply_all, scope_size
from .network import BayesianNetwork, Evidence

DEFAULT_MAX_ENTRIES = 2**28

HEURISTICS = ("min-fill", "min-size", "explicit")


@dataclass(frozen=True)
class EliminationOrder:
    order: tuple[int, ...]
    heuristic: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")

    def check(self, net: BayesianNetwork) -> None:
        if sorted(self.order) != list(range(net.n)):
            raise ValueError("elimination order must be a permutation of all variables")

    @property
    def position(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.order)}


@dataclass(frozen=True)
class ClusterStats:
    """Bucket table sizes induced by an elimination order.

    ``bucket_entries[i]`` is the entry count of the bucket for
    ``order[i]``.
    """

    order: tuple[int, ...]
    bucket_scopes: tuple[frozenset, ...]
    bucket_entries: tuple[int, ...]

    @property
    def max_entries(self) -> int:
        return max(self.bucket_entries, default=1)

    @property
    def normalized_max(self) -> float:
        return math.log2(self.max_entries)


@dataclass(frozen=True, eq=False)
class MarginalSet:
    """Posterior marginals for every variable, indexed by variable id.

    Evidence variables carry point masses on their observed state.
    ``log_pr_e`` is the natural log of the evidence probability, or None
    when the producing engine does not estimate it.
    """

    marginals: tuple[np.ndarray, ...]
    evidence: Evidence = field(default_factory=Evidence)
    log_pr_e: float | None = None

    def __getitem__(self, v: int) -> np.ndarray:
        return self.marginals[v]

    def __len__(self):
        return len(self.marginals)

    @property
    def pr_e(self) -> float | None:
        return None if self.log_pr_e is None else math.exp(self.log_pr_e)

    def non_evidence(self) -> list[int]:
        return [v for v in range(len(self.marginals)) if v not in self.evidence]


# orders -----------------------------------------------------------------------


def moral_graph(net: BayesianNetwork) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(net.n)]
    for x, ps in enumerate(net.parents):
        family = list(ps) + [x]
        for i, a in enumerate(family):
            for b in family[i + 1 :]:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def _fill_count(adj: list[set[int]], v: int) -> int:
    nbrs = sorted(adj[v])
    return sum(
        1 for i, a in enumerate(nbrs) for b in nbrs[i + 1 :] if b not in adj[a]
    )


def greedy_order(adj: Sequence[set[int]], cards: Sequence[int], heuristic: str) -> list[int]:
    adj = [set(a) for a in adj]
    remaining = set(range(len(adj)))
    order = []
    while remaining:
        if heuristic == "min-fill":
            v = min(remaining, key=lambda u: (_fill_count(adj, u), u))
        elif heuristic == "min-size":
            v = min(remaining, key=lambda u: (scope_size(adj[u] | {u}, cards), u))
        else:
            raise ValueError(f"unknown heuristic {heuristic!r}")
        nbrs = adj[v]
        for a in nbrs:
            adj[a] |= nbrs - {a}
            adj[a].discard(v)
        adj[v] = set()
        remaining.remove(v)
        order.append(v)
    return order


def compute_order(
    net: BayesianNetwork, heuristic: str = "min-fill", order: Sequence[int] | None = None
) -> EliminationOrder:
    """Elimination order by min-fill, min-size, or an explicit sequence.

    Ties go to the lowest variable id.
    """
    if heuristic == "explicit":
        if order is None:
            raise ValueError("explicit heuristic needs an order")
        result = EliminationOrder(tuple(order), "explicit")
    else:
        result = EliminationOrder(tuple(greedy_order(moral_graph(net), net.cards, heuristic)), heuristic)
    result.check(net)
    return result


# symbolic buckets ---------------------------------------------------------------


def simulate_buckets(
    scopes: Iterable[Iterable[int]], order: Sequence[int]
) -> tuple[list[frozenset], list[list[int]]]:
    """Symbolic bucket elimination over factor scopes.

    Returns the bucket scope for each position in ``order`` and the indices
    of the input scopes initially placed in each bucket.
    """
    pos = {v: i for i, v in enumerate(order)}
    n = len(order)
    assigned: list[list[int]] = [[] for _ in range(n)]
    pending: list[list[frozenset]] = [[] for _ in range(n)]
    scope_sets = [frozenset(s) for s in scopes]
    for k, s in enumerate(scope_sets):
        if s:
            assigned[min(pos[v] for v in s)].append(k)
    buckets = []
    for i, v in enumerate(order):
        scope = {v}
        for k in assigned[i]:
            scope |= scope_sets[k]
        for m in pending[i]:
            scope |= m
        scope = frozenset(scope)
        buckets.append(scope)
        message = scope - {v}
        if message:
            pending[min(pos[u] for u in message)].append(message)
    return buckets, assigned


def cluster_stats(net: BayesianNetwork, order: EliminationOrder) -> ClusterStats:
    order.check(net)
    buckets, _ = simulate_buckets((cpt.scope for cpt in net.cpts), order.order)
    entries = tuple(scope_size(b, net.cards) for b in buckets)
    return ClusterStats(order.order, tuple(buckets), entries)


# numeric elimination -------------------------------------------------------------


def _scaled(f: Factor) -> tuple[Factor, float]:
    """Rescale so the largest entry is 1; returns the factor and ln(scale)."""
    m = float(f.table.max()) if f.size else 0.0
    if m <= 0.0:
        raise ImpossibleEvidenceError()
    if m == 1.0:
        return f, 0.0
    return f.scaled(1.0 / m), math.log(m)


def _prepare(net: BayesianNetwork, e: Evidence | None, order: EliminationOrder | None):
    e = e if e is not None else Evidence()
    e.validate(net)
    if order is None:
        order = compute_order(net, "min-fill")
    order.check(net)
    return e, order


def eliminate(
    net: BayesianNetwork,
    e: Evidence | None = None,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> MarginalSet:
    """Posterior marginals of every variable and ln Pr(e).

    Raises ImpossibleEvidenceError when Pr(e) = 0 and ScaleGuardError when a
    bucket table would exceed ``max_entries``.
    """
    e, order = _prepare(net, e, order)
    elim = [v for v in order.order if v not in e]
    pos = {v: i for i, v in enumerate(elim)}
    n = len(elim)

    log_const = 0.0
    assigned: list[list[Factor]] = [[] for _ in range(n)]
    for cpt in net.cpts:
        f = cpt.restrict(e)
        if not f.scope:
            value = float(f.table)
            if value <= 0.0:
                raise ImpossibleEvidenceError()
            log_const += math.log(value)
        else:
            assigned[min(pos[v] for v in f.scope)].append(f)

    # upward pass
    up: list[list[tuple[int, Factor]]] = [[] for _ in range(n)]
    parent: list[int | None] = [None] * n
    for i, v in enumerate(elim):
        incoming = [m for _, m in up[i]]
        scope = set()
        for f in assigned[i] + incoming:
            scope.update(f.scope)
        entries = scope_size(scope, net.cards)
        if entries > max_entries:
            raise ScaleGuardError(
                f"bucket of {net.variables[v].name!r} needs {entries} entries "
                f"(cap {max_entries}); network too hard for exact inference at this order"
            )
        msg, log_scale = _scaled(multiply_all(assigned[i] + incoming).sum_out([v]))
        log_const += log_scale
        if msg.scope:
            parent[i] = min(pos[u] for u in msg.scope)
            up[parent[i]].append((i, msg))

    # downward pass
    down: list[Factor | None] = [None] * n
    marginals: list[np.ndarray | None] = [None] * net.n
    for i in reversed(range(n)):
        v = elim[i]
        base = list(assigned[i])
        if down[i] is not None:
            base.append(down[i])
        msgs = up[i]
        belief = multiply_all(base + [m for _, m in msgs])
        marg = belief.marginal([v]).table
        total = marg.sum()
        if total <= 0.0:
            raise ImpossibleEvidenceError()
        marginals[v] = marg / total
        for k, (child, m) in enumerate(msgs):
            others = [mm for j, (_, mm) in enumerate(msgs) if j != k]
            d = multiply_all(base + others).marginal(list(m.scope))
            down[child], _ = _scaled(d)

    for v, s in e.items():
        point = np.zeros(net.card(v))
        point[s] = 1.0
        marginals[v] = point
    return MarginalSet(tuple(marginals), e, log_const)


def posterior_factor(
    net: BayesianNetwork,
    query: Sequence[int],
    e: Evidence | None = None,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> np.ndarray:
    """Joint posterior Pr(query | e) as an array with one axis per query variable.

    Query variables that are observed get point-mass axes.
    """
    e, order = _prepare(net, e, order)
    query = [int(q) for q in query]
    keep = set(query)
    factors = [cpt.restrict(e) for cpt in net.cpts]
    for v in order.order:
        if v in e or v in keep:
            continue
        bucket = [f for f in factors if v in f.scope]
        if not bucket:
            continue
        rest = [f for f in factors if v not in f.scope]
        scope = set().union(*(f.scope for f in bucket))
        if scope_size(scope, net.cards) > max_entries:
            raise ScaleGuardError(f"bucket of {net.variables[v].name!r} exceeds the entry cap")
        msg, _ = _scaled(multiply_all(bucket).sum_out([v]))
        factors = rest + [msg]
    free = [q for q in query if q not in e]
    joint = multiply_all(factors)
    total = float(joint.table.sum())
    if total <= 0.0:
        raise ImpossibleEvidenceError()
    table = joint.marginal(free).table / total
    # re-insert observed query variables as point-mass axes
    out = table
    for axis, q in enumerate(query):
        if q in e:
            point = np.zeros(net.card(q))
            point[e[q]] = 1.0
            out = np.expand_dims(out, axis) * point.reshape(
                [1] * axis + [net.card(q)] + [1] * (out.ndim - axis)
            )
    return out


def log_evidence(
    net: BayesianNetwork,
    e: Evidence | None = None,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> float:
    return eliminate(net, e, order, max_entries).log_pr_e
