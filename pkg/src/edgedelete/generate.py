"""Random networks and evidence for property tests and benchmarks."""

from __future__ import annotations

import itertools

import numpy as np

from .factor import Factor
from .network import BayesianNetwork, Evidence, Variable


def random_cpt(rng: np.random.Generator, parent_cards, card: int, floor: float = 1e-3) -> np.ndarray:
    """Strictly positive CPT with Dirichlet(1) rows, each entry at least ``floor``."""
    rows = rng.dirichlet(np.ones(card), size=int(np.prod(parent_cards, dtype=int)))
    rows = (rows + floor) / (1.0 + card * floor)
    return rows.reshape(tuple(parent_cards) + (card,))


def parity_cpt(parent_cards, card: int) -> np.ndarray:
    """Deterministic CPT: the child's state is the sum of parent states modulo ``card``."""
    table = np.zeros(tuple(parent_cards) + (card,))
    for idx in itertools.product(*(range(k) for k in parent_cards)):
        table[idx + (sum(idx) % card,)] = 1.0
    return table


def _assemble(cards, parents, tables, name) -> BayesianNetwork:
    variables = tuple(
        Variable(i, f"V{i}", tuple(f"s{j}" for j in range(k))) for i, k in enumerate(cards)
    )
    cpts = tuple(Factor(tuple(ps) + (i,), t) for i, (ps, t) in enumerate(zip(parents, tables)))
    return BayesianNetwork(variables, tuple(tuple(ps) for ps in parents), cpts, name)


def random_structure(
    rng: np.random.Generator, n: int, max_parents: int = 3, edge_prob: float = 0.5
) -> list[tuple[int, ...]]:
    """Parent lists of a random DAG whose topological order is 0..n-1."""
    parents = []
    for i in range(n):
        candidates = [j for j in range(i) if rng.random() < edge_prob]
        if len(candidates) > max_parents:
            candidates = sorted(rng.choice(candidates, size=max_parents, replace=False).tolist())
        parents.append(tuple(candidates))
    return parents


def random_network(
    rng: np.random.Generator,
    n: int,
    cards: tuple[int, int] = (2, 4),
    max_parents: int = 3,
    edge_prob: float = 0.5,
    name: str = "random",
) -> BayesianNetwork:
    """Random DAG with random strictly-positive CPTs.

    Variables are relabelled by a random permutation so ids need not follow
    a topological order.
    """
    card_list = rng.integers(cards[0], cards[1] + 1, size=n).tolist()
    parents = random_structure(rng, n, max_parents, edge_prob)
    perm = rng.permutation(n).tolist()  # topo index -> id
    new_cards = [0] * n
    new_parents = [()] * n
    for t in range(n):
        new_cards[perm[t]] = card_list[t]
    for t in range(n):
        new_parents[perm[t]] = tuple(perm[p] for p in parents[t])
    tables = [random_cpt(rng, [new_cards[p] for p in new_parents[i]], new_cards[i]) for i in range(n)]
    return _assemble(new_cards, new_parents, tables, name)


def random_multiply_connected(rng: np.random.Generator, n: int, **kwargs) -> BayesianNetwork:
    """Random network whose skeleton has at least one undirected cycle."""
    while True:
        net = random_network(rng, n, **kwargs)
        if not net.is_polytree():
            return net


def random_polytree(
    rng: np.random.Generator, n: int, cards: tuple[int, int] = (2, 4), name: str = "polytree"
) -> BayesianNetwork:
    """Random singly-connected network: a random spanning tree with random edge directions."""
    card_list = rng.integers(cards[0], cards[1] + 1, size=n).tolist()
    parents: list[list[int]] = [[] for _ in range(n)]
    # attach each node to an earlier one, then orient the edge randomly;
    # ids are relabelled afterwards so the structure is not id-ordered
    perm = rng.permutation(n).tolist()
    for t in range(1, n):
        a, b = perm[t], perm[int(rng.integers(0, t))]
        if rng.random() < 0.5:
            parents[a].append(b)
        else:
            parents[b].append(a)
    tables = [random_cpt(rng, [card_list[p] for p in sorted(ps)], card_list[i]) for i, ps in enumerate(parents)]
    return _assemble(card_list, [tuple(sorted(ps)) for ps in parents], tables, name)


def random_evidence(
    net: BayesianNetwork, rng: np.random.Generator, max_observed: int | None = None
) -> Evidence:
    """Random states on a random subset of variables (possibly empty)."""
    limit = net.n - 1 if max_observed is None else min(max_observed, net.n)
    k = int(rng.integers(0, limit + 1))
    chosen = sorted(rng.choice(net.n, size=k, replace=False).tolist()) if k else []
    return Evidence({v: int(rng.integers(0, net.card(v))) for v in chosen})


def possible_evidence(
    net: BayesianNetwork, rng: np.random.Generator, max_observed: int | None = None
) -> Evidence:
    """Random evidence drawn from an ancestral sample, hence with Pr(e) > 0."""
    world = forward_sample(net, rng)
    limit = net.n - 1 if max_observed is None else min(max_observed, net.n)
    k = int(rng.integers(0, limit + 1))
    chosen = sorted(rng.choice(net.n, size=k, replace=False).tolist()) if k else []
    return Evidence({v: world[v] for v in chosen})


def forward_sample(net: BayesianNetwork, rng: np.random.Generator) -> list[int]:
    """One complete world by ancestral sampling."""
    world = [0] * net.n
    for x in net.topological_order:
        row = net.cpts[x].table[tuple(world[p] for p in net.parents[x])]
        world[x] = int(rng.choice(net.card(x), p=row / row.sum()))
    return world


def parity_network(
    rng: np.random.Generator,
    n: int,
    n_parity: int,
    cards: tuple[int, int] = (2, 3),
    max_parents: int = 3,
    edge_prob: float = 0.5,
) -> tuple[BayesianNetwork, list[tuple[int, int]]]:
    """Random network where ``n_parity`` children carry parity CPTs.

    Returns the network and one deletable edge ``(parent, child)`` per parity
    child, chosen so that the parent's cardinality does not exceed the
    child's (needed for distinct parent states to map to distinct child
    states).
    """
    for _ in range(1000):
        card_list = rng.integers(cards[0], cards[1] + 1, size=n).tolist()
        parents = random_structure(rng, n, max_parents, edge_prob)
        eligible = [
            x for x in range(n)
            if any(card_list[p] <= card_list[x] for p in parents[x])
        ]
        if len(eligible) < n_parity:
            continue
        targets = sorted(rng.choice(eligible, size=n_parity, replace=False).tolist())
        edges = []
        tables = []
        for x in range(n):
            pc = [card_list[p] for p in parents[x]]
            if x in targets:
                tables.append(parity_cpt(pc, card_list[x]))
                options = [p for p in parents[x] if card_list[p] <= card_list[x]]
                edges.append((int(rng.choice(options)), x))
            else:
                tables.append(random_cpt(rng, pc, card_list[x]))
        return _assemble(card_list, parents, tables, "parity"), edges
    raise RuntimeError("could not place parity children; loosen the parameters")

