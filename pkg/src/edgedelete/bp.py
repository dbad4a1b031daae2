"""Loopy belief propagation on the factor graph of a network's CPTs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elimination import MarginalSet
from .network import BayesianNetwork, Evidence


@dataclass(frozen=True, eq=False)
class BPResult:
    marginals: MarginalSet
    iterations: int
    converged: bool
    max_residual: float


def _normalized(m: np.ndarray) -> np.ndarray:
    total = m.sum()
    if total <= 0.0:
        # all-zero message: the instance is inconsistent along this edge
        return np.full_like(m, 1.0 / m.size)
    return m / total


def loopy_bp(
    net: BayesianNetwork,
    e: Evidence | None = None,
    tolerance: float = 1e-8,
    max_iterations: int = 100,
    damping: float = 0.0,
) -> BPResult:
    """Synchronous sum-product message passing.

    Variable-to-factor messages start uniform and the initial
    factor-to-variable messages are computed from them. One iteration
    updates every variable-to-factor message and then every
    factor-to-variable message. Convergence means no coordinate of any
    marginal moved by ``tolerance`` or more since the previous iteration;
    otherwise the last iterate is returned with ``converged=False``.
    """
    e = e if e is not None else Evidence()
    e.validate(net)
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")

    factors = [f for f in (cpt.restrict(e) for cpt in net.cpts) if f.scope]
    free = [v for v in range(net.n) if v not in e]
    neighbours: dict[int, list[int]] = {v: [] for v in free}
    for a, f in enumerate(factors):
        for v in f.scope:
            neighbours[v].append(a)

    to_factor = {(v, a): np.full(net.card(v), 1.0 / net.card(v)) for a, f in enumerate(factors) for v in f.scope}

    def factor_messages(old):
        out = {}
        for a, f in enumerate(factors):
            for i, v in enumerate(f.scope):
                t = f.table
                for j, u in enumerate(f.scope):
                    if u != v:
                        shape = [1] * len(f.scope)
                        shape[j] = net.card(u)
                        t = t * to_factor[(u, a)].reshape(shape)
                axes = tuple(j for j in range(len(f.scope)) if j != i)
                msg = _normalized(t.sum(axis=axes))
                if damping and old is not None:
                    msg = _normalized((1.0 - damping) * msg + damping * old[(a, v)])
                out[(a, v)] = msg
        return out

    def beliefs(to_var):
        out = {}
        for v in free:
            b = np.ones(net.card(v))
            for a in neighbours[v]:
                b = b * to_var[(a, v)]
            out[v] = _normalized(b)
        return out

    to_var = factor_messages(None)
    current = beliefs(to_var)
    iterations = 0
    residual = float("inf")
    converged = False
    while iterations < max_iterations:
        iterations += 1
        for v in free:
            for a in neighbours[v]:
                m = np.ones(net.card(v))
                for b in neighbours[v]:
                    if b != a:
                        m = m * to_var[(b, v)]
                to_factor[(v, a)] = _normalized(m)
        to_var = factor_messages(to_var)
        updated = beliefs(to_var)
        residual = max((float(np.abs(updated[v] - current[v]).max()) for v in free), default=0.0)
        current = updated
        if residual < tolerance:
            converged = True
            break

    marginals = []
    for v in range(net.n):
        if v in e:
            point = np.zeros(net.card(v))
            point[e[v]] = 1.0
            marginals.append(point)
        else:
            marginals.append(current[v])
    return BPResult(MarginalSet(tuple(marginals), e, None), iterations, converged, residual)
