"""Exhaustive enumeration of the full joint distribution.

This is the ground-truth oracle the test suites compare every other
engine against. It never shares code paths with elimination beyond the
factor product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleEvidenceError, ScaleGuardError
from .network import BayesianNetwork, Evidence

MAX_WORLDS = 2**24


@dataclass(frozen=True, eq=False)
class JointPosterior:
    """Pr(w|e) over all complete worlds, one axis per variable in id order.

    Worlds inconsistent with the evidence hold probability zero.
    """

    table: np.ndarray
    pr_e: float

    @property
    def log_pr_e(self) -> float:
        return math.log(self.pr_e)

    def marginal(self, v: int) -> np.ndarray:
        axes = tuple(a for a in range(self.table.ndim) if a != v)
        return self.table.sum(axis=axes)

    def family(self, variables) -> np.ndarray:
        """Joint posterior over ``variables``, axes in the given order."""
        variables = list(variables)
        others = tuple(a for a in range(self.table.ndim) if a not in variables)
        reduced = self.table.sum(axis=others)
        kept = sorted(variables)
        return np.transpose(reduced, [kept.index(v) for v in variables])


def joint_table(net: BayesianNetwork, max_worlds: int = MAX_WORLDS) -> np.ndarray:
    """Unnormalized Pr(w) for every complete world."""
    worlds = math.prod(net.cards)
    if worlds > max_worlds:
        raise ScaleGuardError(f"{worlds} worlds exceed the enumeration guard of {max_worlds}")
    joint = np.ones(net.cards)
    order = range(net.n)
    for cpt in net.cpts:
        joint = joint * cpt.aligned(order, net.cards)
    return joint


def evidence_mask(net: BayesianNetwork, e: Evidence) -> np.ndarray:
    mask = np.ones(net.cards, dtype=bool)
    for v, s in e.items():
        keep = np.zeros(net.card(v), dtype=bool)
        keep[s] = True
        shape = [1] * net.n
        shape[v] = net.card(v)
        mask &= keep.reshape(shape)
    return mask


def joint_enumerate(
    net: BayesianNetwork, e: Evidence | None = None, max_worlds: int = MAX_WORLDS
) -> JointPosterior:
    e = e if e is not None else Evidence()
    e.validate(net)
    joint = np.where(evidence_mask(net, e), joint_table(net, max_worlds), 0.0)
    pr_e = float(joint.sum())
    if pr_e <= 0.0:
        raise ImpossibleEvidenceError()
    return JointPosterior(joint / pr_e, pr_e)
