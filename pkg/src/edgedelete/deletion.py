"""Evidence-sensitive edge deletion.

Deleting ``Y -> X`` replaces X's CPT by the mixture of its Y-slices
weighted by a distribution over Y's states. With the true posterior
Pr(Y|e) this is the ED method; the ID method iterates the posteriors of the
simplified network to a fixed point, starting from uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .elimination import (
    DEFAULT_MAX_ENTRIES,
    EliminationOrder,
    compute_order,
    eliminate,
    posterior_factor,
    simulate_buckets,
)
from .errors import ImpossibleEvidenceError, NetworkError, UnreachableThresholdError
from .factor import Factor, scope_size
from .network import BayesianNetwork, Evidence, Variable

DIST_TOLERANCE = 1e-9


@dataclass(frozen=True, order=True)
class EdgeRef:
    parent: int
    child: int

    def check(self, net: BayesianNetwork) -> None:
        if not (0 <= self.child < net.n) or self.parent not in net.parents[self.child]:
            raise NetworkError(f"edge {self.parent} -> {self.child} is not in the network")

    def label(self, net: BayesianNetwork) -> str:
        return f"{net.variables[self.parent].name}->{net.variables[self.child].name}"


@dataclass(frozen=True, eq=False)
class DeletionPlan:
    """Edges to delete and, once known, the distribution used for each."""

    edges: tuple[EdgeRef, ...] = ()
    replacements: tuple[np.ndarray | None, ...] | None = None
    at_most_one_per_child: bool = True

    def __post_init__(self):
        edges = tuple(EdgeRef(*e) if not isinstance(e, EdgeRef) else e for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(set(edges)) != len(edges):
            raise ValueError("plan lists an edge twice")
        if self.at_most_one_per_child:
            children = [e.child for e in edges]
            if len(set(children)) != len(children):
                raise ValueError("plan deletes two edges into the same child")
        if self.replacements is not None:
            if len(self.replacements) != len(edges):
                raise ValueError("need one replacement per edge")
            reps = []
            for r in self.replacements:
                if r is not None:
                    r = np.array(r, dtype=np.float64)
                    _check_distribution(r)
                    r.flags.writeable = False
                reps.append(r)
            object.__setattr__(self, "replacements", tuple(reps))

    def __len__(self):
        return len(self.edges)

    @property
    def filled(self) -> bool:
        return self.replacements is not None and all(r is not None for r in self.replacements)

    def with_replacements(self, replacements: Sequence[np.ndarray]) -> DeletionPlan:
        return replace(self, replacements=tuple(replacements))

    def to_dict(self, net: BayesianNetwork) -> dict:
        reps = self.replacements or (None,) * len(self.edges)
        return {
            "at_most_one_per_child": self.at_most_one_per_child,
            "edges": [
                {
                    "parent": net.variables[e.parent].name,
                    "child": net.variables[e.child].name,
                    "replacement": None if r is None else [float(x) for x in r],
                }
                for e, r in zip(self.edges, reps)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict, net: BayesianNetwork) -> DeletionPlan:
        edges = []
        reps = []
        for item in doc["edges"]:
            edges.append(EdgeRef(net.index(item["parent"]), net.index(item["child"])))
            reps.append(item.get("replacement"))
        have = [r is not None for r in reps]
        return cls(
            tuple(edges),
            tuple(reps) if any(have) else None,
            bool(doc.get("at_most_one_per_child", True)),
        )


@dataclass(frozen=True, eq=False)
class FixedPointTrace:
    iterations: int
    converged: bool
    replacements: tuple[np.ndarray, ...]
    changes: tuple[float, ...] = field(default_factory=tuple)

    @property
    def final_change(self) -> float:
        return self.changes[-1] if self.changes else 0.0


def _check_distribution(dist: np.ndarray, card: int | None = None) -> None:
    if dist.ndim != 1 or (card is not None and dist.size != card):
        raise ValueError(f"distribution has shape {dist.shape}, expected ({card},)")
    if np.any(dist < 0) or not np.all(np.isfinite(dist)):
        raise ValueError("distribution entries must be finite and nonnegative")
    if abs(dist.sum() - 1.0) > DIST_TOLERANCE:
        raise ValueError(f"distribution sums to {dist.sum()!r}, not 1")


# single-edge rewrites ------------------------------------------------------------


def delete_edge(net: BayesianNetwork, edge: EdgeRef, dist) -> BayesianNetwork:
    """Remove ``edge`` and mix the child's CPT over the parent with ``dist``."""
    edge.check(net)
    dist = np.asarray(dist, dtype=np.float64)
    _check_distribution(dist, net.card(edge.parent))
    ps = net.parents[edge.child]
    k = ps.index(edge.parent)
    table = np.tensordot(dist, net.cpts[edge.child].table, axes=([0], [k]))
    return net.replace_cpt(edge.child, ps[:k] + ps[k + 1 :], table)


def auxiliary_root_form(net: BayesianNetwork, edge: EdgeRef, dist) -> BayesianNetwork:
    """Swap the parent for a fresh root copy of it whose CPT is ``dist``.

    The new root gets id ``net.n``; the child's CPT is unchanged apart from
    its scope.
    """
    edge.check(net)
    dist = np.asarray(dist, dtype=np.float64)
    _check_distribution(dist, net.card(edge.parent))
    y = net.variables[edge.parent]
    name = y.name + "'"
    while name in {v.name for v in net.variables}:
        name += "'"
    aux = Variable(net.n, name, y.states)
    ps = tuple(aux.id if p == edge.parent else p for p in net.parents[edge.child])
    parents = list(net.parents) + [()]
    cpts = list(net.cpts) + [Factor((aux.id,), dist)]
    parents[edge.child] = ps
    cpts[edge.child] = Factor(ps + (edge.child,), net.cpts[edge.child].table)
    return BayesianNetwork(net.variables + (aux,), tuple(parents), tuple(cpts), net.name)


def apply_plan(net: BayesianNetwork, plan: DeletionPlan) -> BayesianNetwork:
    if not plan.filled:
        raise ValueError("plan has unset replacement distributions")
    out = net
    for edge, dist in zip(plan.edges, plan.replacements):
        out = delete_edge(out, edge, dist)
    return out


def deleted_structure(net: BayesianNetwork, edges: Sequence[EdgeRef]) -> list[tuple[int, ...]]:
    parents = [list(ps) for ps in net.parents]
    for e in edges:
        parents[e.child].remove(e.parent)
    return [tuple(ps) for ps in parents]


# edge selection ------------------------------------------------------------------


def _bucket_entries(parents, order, cards) -> tuple[list[int], list[list[int]]]:
    scopes = [tuple(ps) + (x,) for x, ps in enumerate(parents)]
    buckets, assigned = simulate_buckets(scopes, order)
    return [scope_size(b, cards) for b in buckets], assigned


def select_edges(
    net: BayesianNetwork,
    order: EliminationOrder,
    threshold: float,
    at_most_one_per_child: bool = True,
) -> DeletionPlan:
    """Greedy bucket-local edge choice until every bucket fits in 2**threshold entries.

    Buckets are scanned along ``order``. At the first oversized bucket the
    edge whose deletion shrinks that bucket the most is removed, and all
    bucket scopes are recomputed. Candidates are the CPTs placed in that
    bucket; if none of them shrinks it, CPTs placed in earlier buckets are
    considered as well. Ties go to the larger cumulative shrinkage of the
    buckets up to this one, then the smaller parent cardinality, then the
    lowest (parent, child) pair.
    """
    order.check(net)
    cards = net.cards
    limit = 2.0**threshold * (1.0 + 1e-12)
    floor = max(cards)
    if floor > limit:
        raise UnreachableThresholdError(
            f"threshold {threshold} is below log2 of a single-variable table ({math.log2(floor):.4g})"
        )
    parents = [list(ps) for ps in net.parents]
    deleted: list[EdgeRef] = []
    touched: set[int] = set()

    while True:
        entries, assigned = _bucket_entries(parents, order.order, cards)
        over = next((i for i, n in enumerate(entries) if n > limit), None)
        if over is None:
            break

        def score(edge: EdgeRef):
            trial = [list(ps) for ps in parents]
            trial[edge.child].remove(edge.parent)
            after, _ = _bucket_entries(trial, order.order, cards)
            return (
                entries[over] - after[over],
                sum(entries[: over + 1]) - sum(after[: over + 1]),
                -cards[edge.parent],
                (-edge.parent, -edge.child),
            )

        def candidates(buckets):
            out = []
            for i in buckets:
                for x in assigned[i]:
                    if at_most_one_per_child and x in touched:
                        continue
                    out.extend(EdgeRef(p, x) for p in parents[x])
            return out

        best = None
        for pool in (candidates([over]), candidates(range(over + 1))):
            if not pool:
                continue
            scored = max((score(e), e) for e in pool)
            if best is None or scored[0] > best[0]:
                best = scored
            if best[0][0] > 0:
                break
        if best is None:
            name = net.variables[order.order[over]].name
            raise UnreachableThresholdError(
                f"bucket of {name!r} has {entries[over]} entries and no deletable edge remains",
                bucket=order.order[over],
            )
        edge = best[1]
        parents[edge.child].remove(edge.parent)
        touched.add(edge.child)
        deleted.append(edge)

    return DeletionPlan(tuple(deleted), None, at_most_one_per_child)


# methods -------------------------------------------------------------------------


def run_ed(
    net: BayesianNetwork,
    e: Evidence | None,
    plan: DeletionPlan,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> tuple[BayesianNetwork, DeletionPlan]:
    """Delete the plan's edges using the true posteriors of the original network.

    ``order`` is used for exact inference on the original network.
    """
    e = e if e is not None else Evidence()
    if not plan.edges:
        return net, plan.with_replacements(())
    exact = eliminate(net, e, order, max_entries)
    filled = plan.with_replacements([exact[edge.parent] for edge in plan.edges])
    return apply_plan(net, filled), filled


def run_id(
    net: BayesianNetwork,
    e: Evidence | None,
    plan: DeletionPlan,
    epsilon: float = 1e-8,
    max_iterations: int = 100,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> tuple[BayesianNetwork, FixedPointTrace]:
    """Fixed-point edge deletion.

    Replacements start uniform (point masses for observed parents). Each
    iteration solves the simplified network exactly and reads off the
    parents' posteriors. Iteration stops once no coordinate moves by
    ``epsilon`` or more. The returned network is the one whose posteriors
    were last computed, so its own parent posteriors reproduce the returned
    replacements within ``epsilon`` on convergence.

    ``order`` must be valid for the simplified network; min-fill on the
    simplified structure is used when omitted.
    """
    e = e if e is not None else Evidence()
    e.validate(net)
    for edge in plan.edges:
        edge.check(net)
    reps = []
    for edge in plan.edges:
        k = net.card(edge.parent)
        if edge.parent in e:
            r = np.zeros(k)
            r[e[edge.parent]] = 1.0
        else:
            r = np.full(k, 1.0 / k)
        reps.append(r)

    approx = apply_plan(net, plan.with_replacements(reps))
    if order is None:
        order = compute_order(approx, "min-fill")
    changes: list[float] = []
    converged = False
    for t in range(1, max_iterations + 1):
        approx = apply_plan(net, plan.with_replacements(reps))
        try:
            ms = eliminate(approx, e, order, max_entries)
        except ImpossibleEvidenceError:
            raise ImpossibleEvidenceError(
                "evidence has probability zero in the approximate network", iteration=t
            ) from None
        new = [ms[edge.parent] for edge in plan.edges]
        change = max((float(np.abs(a - b).max()) for a, b in zip(new, reps)), default=0.0)
        changes.append(change)
        if change < epsilon:
            converged = True
            break
        reps = new
    trace = FixedPointTrace(t, converged, tuple(np.asarray(r) for r in reps), tuple(changes))
    return approx, trace


def run_vanengelen(
    net: BayesianNetwork,
    plan: DeletionPlan,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> tuple[BayesianNetwork, DeletionPlan]:
    """Evidence-insensitive arc removal: the child's new CPT is Pr(x | remaining parents).

    The plan's replacements are set to the parents' prior marginals for
    reference. Parent configurations of probability zero fall back to the
    mixture over the deleted parents' priors.
    """
    if not plan.edges:
        return net, plan.with_replacements(())
    prior = eliminate(net, Evidence(), order, max_entries)
    out = net
    by_child: dict[int, list[int]] = {}
    for edge in plan.edges:
        edge.check(net)
        by_child.setdefault(edge.child, []).append(edge.parent)
    for x, ys in by_child.items():
        keep = tuple(p for p in net.parents[x] if p not in ys)
        joint = posterior_factor(net, list(keep) + [x], Evidence(), order, max_entries)
        mass = joint.sum(axis=-1, keepdims=True)
        fallback = net.cpts[x]
        for y in ys:
            fallback = Factor(
                tuple(v for v in fallback.scope if v != y),
                np.tensordot(prior[y], fallback.table, axes=([0], [fallback.scope.index(y)])),
            )
        fallback_table = fallback.transpose(keep + (x,)).table
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(mass > 0, joint / np.where(mass > 0, mass, 1.0), fallback_table)
        out = out.replace_cpt(x, keep, cond / cond.sum(axis=-1, keepdims=True))
    reps = [prior[edge.parent] for edge in plan.edges]
    return out, plan.with_replacements(reps)
