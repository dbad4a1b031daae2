"""Quality-of-approximation mathematics for edge deletion.

All logarithms are natural, so divergences and entropies are in nats.
Infinite divergence is returned as ``math.inf`` and serialized as "inf".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deletion import DeletionPlan, EdgeRef, delete_edge
from .elimination import DEFAULT_MAX_ENTRIES, EliminationOrder, eliminate, posterior_factor
from .errors import NetworkError
from .factor import Factor
from .network import BayesianNetwork, Evidence, make_network
from .oracle import MAX_WORLDS, joint_enumerate

DETERMINISTIC_TOLERANCE = 1e-12
POSTERIOR_MATCH_TOLERANCE = 1e-9


def kl(p, q) -> float:
    """KL(p, q) = sum p ln(p/q); zero-probability terms of p contribute nothing."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    ps = p[support]
    return float(np.sum(ps * (np.log(ps) - np.log(q[support]))))


def entropy(dist) -> float:
    """Shannon entropy in nats with 0 ln 0 = 0."""
    d = np.asarray(dist, dtype=np.float64)
    d = d[d > 0]
    return float(-np.sum(d * np.log(d)))


entropy_given_e = entropy


def check_deterministic(cpt: Factor, parent: int) -> bool:
    """Whether the child's CPT is 0/1-valued and no two parent states share an outcome.

    For every setting of the other parents and every child state, at most
    one state of ``parent`` may give that child state probability 1.
    """
    if parent not in cpt.scope[:-1]:
        raise NetworkError(f"variable {parent} is not a parent in this CPT")
    t = cpt.table
    ones = np.abs(t - 1.0) <= DETERMINISTIC_TOLERANCE
    zeros = np.abs(t) <= DETERMINISTIC_TOLERANCE
    if not np.all(ones | zeros):
        return False
    return bool(np.all(ones.sum(axis=cpt.scope.index(parent)) <= 1))


# Theorem-4 style exact KL -----------------------------------------------------------


def lifted_cpt(net: BayesianNetwork, approx: BayesianNetwork, x: int) -> np.ndarray:
    """The approximate CPT of ``x`` broadcast back onto the original parent scope."""
    full = net.parents[x]
    mine = approx.parents[x]
    if not set(mine) <= set(full):
        raise NetworkError(f"approximate parents of {net.variables[x].name!r} are not a subset")
    scope = full + (x,)
    cards = dict(zip(scope, net.cpts[x].cards))
    return np.broadcast_to(approx.cpts[x].aligned(scope, cards), net.cpts[x].cards)


def changed_variables(net: BayesianNetwork, approx: BayesianNetwork) -> list[int]:
    if approx.variables != net.variables:
        raise NetworkError("networks must share their variables")
    return [
        x for x in range(net.n)
        if approx.parents[x] != net.parents[x]
        or not np.array_equal(approx.cpts[x].table, net.cpts[x].table)
    ]


def theorem4_kl(
    net: BayesianNetwork,
    approx: BayesianNetwork,
    e: Evidence | None = None,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> float:
    """KL(Pr(.|e), Pr'(.|e)) from family posteriors, without touching the full joint.

    Evaluates ln(Pr'(e)/Pr(e)) minus, for every changed CPT, the expected
    log ratio of the approximate to the original parameter under
    Pr(x, parents | e). ``approx`` may have fewer parents per variable; its
    CPTs are lifted back onto the original scopes.
    """
    e = e if e is not None else Evidence()
    changed = changed_variables(net, approx)
    if not changed:
        return 0.0
    log_ratio = (
        eliminate(approx, e, None, max_entries).log_pr_e
        - eliminate(net, e, order, max_entries).log_pr_e
    )
    total = log_ratio
    for x in changed:
        family = list(net.parents[x]) + [x]
        post = posterior_factor(net, family, e, order, max_entries)
        theta = net.cpts[x].table
        theta_new = lifted_cpt(net, approx, x)
        live = post > 0
        if np.any(theta_new[live] <= 0):
            return math.inf
        # theta > 0 wherever post > 0: those worlds carry positive probability
        total -= float(np.sum(post[live] * (np.log(theta_new[live]) - np.log(theta[live]))))
    return total


def theorem4_kl_deterministic(
    net: BayesianNetwork,
    approx: BayesianNetwork,
    e: Evidence | None = None,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> float:
    """The deterministic-CPT form: ln(Pr'(e)/Pr(e)) + sum Pr(yu|e) KL(Theta_X|yu, Theta'_X|yu).

    Valid only when every changed CPT is 0/1-valued.
    """
    e = e if e is not None else Evidence()
    changed = changed_variables(net, approx)
    if not changed:
        return 0.0
    total = (
        eliminate(approx, e, None, max_entries).log_pr_e
        - eliminate(net, e, order, max_entries).log_pr_e
    )
    for x in changed:
        theta = net.cpts[x].table
        zeros = np.abs(theta) <= DETERMINISTIC_TOLERANCE
        ones = np.abs(theta - 1.0) <= DETERMINISTIC_TOLERANCE
        if not np.all(zeros | ones):
            raise ValueError(f"CPT of {net.variables[x].name!r} is not deterministic")
        ps = list(net.parents[x])
        weights = posterior_factor(net, ps, e, order, max_entries) if ps else np.asarray(1.0)
        theta_new = lifted_cpt(net, approx, x)
        for idx in np.ndindex(*theta.shape[:-1]):
            w = float(weights[idx])
            if w > 0:
                term = kl(theta[idx], theta_new[idx])
                if math.isinf(term):
                    return math.inf
                total += w * term
    return total


# bound reports ------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    log_ratio: float
    entropy_sum: float
    bound: float
    exact_kl: float | None
    equality_certified: bool
    bound_applicable: bool = True
    note: str = ""
    entropies: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            return "inf" if math.isinf(x) else float(x)

        return {
            "log_ratio": num(self.log_ratio),
            "entropy_sum": num(self.entropy_sum),
            "bound": num(self.bound),
            "exact_kl": num(self.exact_kl),
            "equality_certified": self.equality_certified,
            "bound_applicable": self.bound_applicable,
            "note": self.note,
            "entropies": [num(h) for h in self.entropies],
        }


def exact_kl(net: BayesianNetwork, approx: BayesianNetwork, e: Evidence | None = None) -> float:
    """Brute-force KL between the two conditionals over all complete worlds."""
    p = joint_enumerate(net, e)
    q = joint_enumerate(approx, e)
    return kl(p.table, q.table)


def bound_report(
    net: BayesianNetwork,
    approx: BayesianNetwork,
    plan: DeletionPlan,
    e: Evidence | None = None,
    compute_exact: bool = False,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> BoundReport:
    """KL upper bound ln(Pr'(e)/Pr(e)) + sum of ENT(Y|e) over deleted edges.

    The bound is only claimed when each child loses at most one parent and
    the plan's replacements are the original network's posteriors Pr(Y|e);
    otherwise the report is produced with ``bound_applicable=False``.
    """
    e = e if e is not None else Evidence()
    exact = eliminate(net, e, order, max_entries)
    log_ratio = eliminate(approx, e, None, max_entries).log_pr_e - exact.log_pr_e
    entropies = tuple(entropy(exact[edge.parent]) for edge in plan.edges)
    entropy_sum = float(sum(entropies))

    notes = []
    children = [edge.child for edge in plan.edges]
    applicable = True
    if len(set(children)) != len(children):
        applicable = False
        notes.append("more than one deleted edge into a child; bound inapplicable")
    if not plan.filled:
        applicable = False
        notes.append("plan carries no replacement distributions")
    else:
        for edge, r in zip(plan.edges, plan.replacements):
            if np.abs(np.asarray(r) - exact[edge.parent]).max() > POSTERIOR_MATCH_TOLERANCE:
                applicable = False
                notes.append("replacements are not the true posteriors; bound heuristic, hypothesis unmet")
                break

    certified = applicable and all(
        check_deterministic(net.cpts[edge.child], edge.parent) for edge in plan.edges
    )

    kl_value = None
    if compute_exact and math.prod(net.cards) <= MAX_WORLDS:
        kl_value = exact_kl(net, approx, e)
    return BoundReport(
        log_ratio,
        entropy_sum,
        log_ratio + entropy_sum,
        kl_value,
        certified,
        applicable,
        "; ".join(notes),
        entropies,
    )


# the three-variable counterexample ------------------------------------------------


def appendix_b_network(theta_y: float, theta_zxy: float | None = None) -> tuple[BayesianNetwork, Evidence]:
    """Three binary variables where ENT(Y|e) can vanish while ln(Pr'(e)/Pr(e)) grows.

    Y is a root with Pr(y) = ``theta_y``; X copies Y; Z depends on X and Y
    with Pr(z | x, y) = Pr(z | ~x, ~y) = ``theta_zxy`` and Pr(z | x, ~y) =
    Pr(z | ~x, y) = 1. Evidence is Z = z. When ``theta_zxy`` is omitted it
    is set to (2 theta_y (1 - theta_y))**2. State 0 of each variable is the
    positive literal.
    """
    if not 0.0 < theta_y < 1.0:
        raise ValueError("theta_y must lie strictly between 0 and 1")
    if theta_zxy is None:
        theta_zxy = (2.0 * theta_y * (1.0 - theta_y)) ** 2
    if not 0.0 <= theta_zxy <= 1.0:
        raise ValueError("theta_zxy must be a probability")
    c = theta_zxy
    net = make_network(
        [
            ("Y", ["y", "~y"], [], [theta_y, 1.0 - theta_y]),
            ("X", ["x", "~x"], ["Y"], [[1.0, 0.0], [0.0, 1.0]]),
            (
                "Z",
                ["z", "~z"],
                ["X", "Y"],
                [[[c, 1.0 - c], [1.0, 0.0]], [[1.0, 0.0], [c, 1.0 - c]]],
            ),
        ],
        name="appendix-b",
    )
    return net, Evidence({2: 0})


def appendix_b_deleted(theta_y: float, theta_zxy: float | None = None) -> BayesianNetwork:
    """The counterexample network with Y -> X deleted using Pr(Y|e) = (theta_y, 1 - theta_y)."""
    net, _ = appendix_b_network(theta_y, theta_zxy)
    return delete_edge(net, EdgeRef(0, 1), [theta_y, 1.0 - theta_y])
