"""Trial pipeline comparing loopy BP against edge deletion (ED and ID).

Each trial samples evidence on every leaf, computes exact posteriors as
ground truth, then scores each method by the fraction of flipped argmax
states and the mean per-variable KL divergence.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bp import loopy_bp
from .deletion import DeletionPlan, deleted_structure, run_ed, run_id, select_edges
from .elimination import (
    DEFAULT_MAX_ENTRIES,
    EliminationOrder,
    MarginalSet,
    cluster_stats,
    compute_order,
    eliminate,
    simulate_buckets,
)
from .errors import ImpossibleEvidenceError, ScaleGuardError, UnreachableThresholdError
from .factor import scope_size
from .generate import forward_sample
from .io import load_network
from .kl import kl
from .network import BayesianNetwork, Evidence

CSV_VERSION = "edgedelete-trials/1"
TRIAL_COLUMNS = (
    "trial", "method", "threshold", "flip_rate", "avg_kl",
    "iterations", "converged", "cluster_pct", "ln_pr_e",
)
SUMMARY_COLUMNS = (
    "method", "threshold", "trials", "flip_rate", "avg_kl", "iterations",
    "iterations_converged", "converged_fraction", "cluster_pct",
)
METHODS = ("bp", "ed", "id")
RESAMPLE_LIMIT = 100


# metrics -------------------------------------------------------------------------


def _check_same(exact: MarginalSet, approx: MarginalSet) -> list[int]:
    ne = exact.non_evidence()
    if ne != approx.non_evidence() or len(exact) != len(approx):
        raise ValueError("marginal sets cover different non-evidence variables")
    return ne


def count_flips(exact: MarginalSet, approx: MarginalSet) -> float:
    """Fraction of non-evidence variables whose most likely state changed.

    ``np.argmax`` returns the first maximum, so ties go to the lowest state
    index on both sides.
    """
    ne = _check_same(exact, approx)
    if not ne:
        return 0.0
    flips = sum(int(np.argmax(exact[v]) != np.argmax(approx[v])) for v in ne)
    return flips / len(ne)


def avg_marginal_kl(exact: MarginalSet, approx: MarginalSet) -> float:
    """Mean of KL(Pr(X|e), Pr'(X|e)) over non-evidence variables (inf if any term is)."""
    ne = _check_same(exact, approx)
    if not ne:
        return 0.0
    return float(sum(kl(exact[v], approx[v]) for v in ne) / len(ne))


# evidence --------------------------------------------------------------------------


def leaf_priors(net: BayesianNetwork, order: EliminationOrder | None = None,
                max_entries: int = DEFAULT_MAX_ENTRIES) -> dict[int, np.ndarray] | None:
    """Exact prior marginals of the leaves, or None when exact inference is infeasible."""
    try:
        prior = eliminate(net, Evidence(), order, max_entries)
    except ScaleGuardError:
        return None
    return {v: prior[v] for v in net.leaves()}


def sample_leaf_evidence(
    net: BayesianNetwork,
    rng: np.random.Generator,
    priors: dict[int, np.ndarray] | None = None,
    order: EliminationOrder | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> Evidence:
    """Observe every leaf, each drawn independently from its prior marginal.

    Draws with Pr(e) = 0 are rejected and redrawn, up to 100 attempts. When
    ``priors`` is None the leaf values come from one ancestral sample of
    the whole network instead.
    """
    leaves = net.leaves()
    if not leaves:
        raise ValueError("network has no leaves")
    if priors is None:
        world = forward_sample(net, rng)
        return Evidence({v: world[v] for v in leaves})
    for _ in range(RESAMPLE_LIMIT):
        e = Evidence({v: int(rng.choice(len(priors[v]), p=priors[v])) for v in leaves})
        try:
            eliminate(net, e, order, max_entries)
        except ImpossibleEvidenceError:
            continue
        return e
    raise ImpossibleEvidenceError(f"leaf evidence impossible in {RESAMPLE_LIMIT} draws")


# configuration and results ------------------------------------------------------------


@dataclass
class TrialConfig:
    network: BayesianNetwork | str | Path
    thresholds: Sequence[float] = ()
    trials: int = 50
    seed: int = 0
    methods: Sequence[str] = METHODS
    tol: float = 1e-8
    max_iters: int = 100
    order: str | Sequence[int] = "min-fill"
    allow_multi: bool = False
    reselect_per_trial: bool = False
    max_entries: int = DEFAULT_MAX_ENTRIES

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if set(self.methods) & {"ed", "id"} and not self.thresholds:
            raise ValueError("ED and ID need at least one threshold")

    def load(self) -> BayesianNetwork:
        if isinstance(self.network, BayesianNetwork):
            return self.network
        return load_network(self.network)

    def describe(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "network"}
        d["network"] = (
            self.network.name if isinstance(self.network, BayesianNetwork) else str(self.network)
        )
        d["thresholds"] = [float(t) for t in self.thresholds]
        d["methods"] = list(self.methods)
        if not isinstance(self.order, str):
            d["order"] = [int(v) for v in self.order]
        return d


@dataclass(frozen=True)
class TrialResult:
    trial: int
    method: str
    threshold: float | None
    flip_rate: float
    avg_kl: float
    iterations: int
    converged: bool
    cluster_pct: float | None
    ln_pr_e: float | None


@dataclass
class BenchmarkResult:
    rows: list[TrialResult]
    summary: list[dict]
    meta: dict = field(default_factory=dict)

    def trials_csv(self) -> str:
        return _render_csv(
            TRIAL_COLUMNS,
            [
                [r.trial, r.method, r.threshold, r.flip_rate, r.avg_kl,
                 r.iterations, r.converged, r.cluster_pct, r.ln_pr_e]
                for r in self.rows
            ],
        )

    def summary_csv(self) -> str:
        return _render_csv(SUMMARY_COLUMNS, [[s[c] for c in SUMMARY_COLUMNS] for s in self.summary])

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trials.csv").write_text(self.trials_csv())
        (out / "summary.csv").write_text(self.summary_csv())
        (out / "meta.json").write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def _render_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def summarize(rows: Sequence[TrialResult]) -> list[dict]:
    """Per method and threshold means, in first-appearance order."""
    groups: dict[tuple, list[TrialResult]] = {}
    for r in rows:
        groups.setdefault((r.method, r.threshold), []).append(r)
    out = []
    for (method, threshold), rs in groups.items():
        conv = [r.iterations for r in rs if r.converged]
        pct = [r.cluster_pct for r in rs if r.cluster_pct is not None]
        out.append({
            "method": method,
            "threshold": threshold,
            "trials": len(rs),
            "flip_rate": float(np.mean([r.flip_rate for r in rs])),
            "avg_kl": float(np.mean([r.avg_kl for r in rs])),
            "iterations": float(np.mean([r.iterations for r in rs])),
            "iterations_converged": float(np.mean(conv)) if conv else None,
            "converged_fraction": len(conv) / len(rs),
            "cluster_pct": float(np.mean(pct)) if pct else None,
        })
    return out


# the pipeline ------------------------------------------------------------------------


def _resolve_order(net: BayesianNetwork, spec) -> EliminationOrder:
    if isinstance(spec, str):
        return compute_order(net, spec)
    return compute_order(net, "explicit", spec)


def run_benchmark(cfg: TrialConfig) -> BenchmarkResult:
    """Run every trial of ``cfg``; the output is a pure function of the config."""
    net = cfg.load()
    order = _resolve_order(net, cfg.order)
    base_stats = cluster_stats(net, order)
    priors = leaf_priors(net, order, cfg.max_entries)
    fallbacks = []
    if priors is None:
        fallbacks.append("leaf evidence by ancestral sampling (exact priors infeasible)")

    plans: dict[float, DeletionPlan | None] = {}
    plan_info = {}
    approx_pct: dict[float, float] = {}

    def plan_for(threshold: float) -> DeletionPlan | None:
        try:
            plan = select_edges(net, order, threshold, not cfg.allow_multi)
        except UnreachableThresholdError as exc:
            plan_info[str(threshold)] = {"error": str(exc)}
            return None
        parents = deleted_structure(net, plan.edges)
        stats_scopes = [tuple(ps) + (x,) for x, ps in enumerate(parents)]
        buckets, _ = simulate_buckets(stats_scopes, order.order)
        entries = max(scope_size(b, net.cards) for b in buckets)
        approx_pct[threshold] = 100.0 * entries / base_stats.max_entries
        plan_info[str(threshold)] = {
            "edges": [e.label(net) for e in plan.edges],
            "normalized_max": math.log2(entries),
            "cluster_pct": approx_pct[threshold],
        }
        return plan

    thresholds = [float(t) for t in cfg.thresholds]
    if not cfg.reselect_per_trial:
        for t in thresholds:
            plans[t] = plan_for(t)

    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    rows: list[TrialResult] = []
    skipped = []
    for trial, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        try:
            e = sample_leaf_evidence(net, rng, priors, order, cfg.max_entries)
            truth = eliminate(net, e, order, cfg.max_entries)
        except (ScaleGuardError, ImpossibleEvidenceError) as exc:
            skipped.append({"trial": trial, "reason": str(exc)})
            continue

        if "bp" in cfg.methods:
            res = loopy_bp(net, e, cfg.tol, cfg.max_iters)
            rows.append(TrialResult(
                trial, "bp", None, count_flips(truth, res.marginals),
                avg_marginal_kl(truth, res.marginals), res.iterations, res.converged, None, None,
            ))

        for t in thresholds:
            plan = plan_for(t) if cfg.reselect_per_trial else plans[t]
            if plan is None:
                continue
            if "ed" in cfg.methods:
                approx, _ = run_ed(net, e, plan, order, cfg.max_entries)
                ms = eliminate(approx, e, order, cfg.max_entries)
                rows.append(TrialResult(
                    trial, "ed", t, count_flips(truth, ms), avg_marginal_kl(truth, ms),
                    0, True, approx_pct[t], ms.log_pr_e,
                ))
            if "id" in cfg.methods:
                try:
                    approx, trace = run_id(net, e, plan, cfg.tol, cfg.max_iters, order, cfg.max_entries)
                except ImpossibleEvidenceError as exc:
                    skipped.append({"trial": trial, "threshold": t, "method": "id", "reason": str(exc)})
                    continue
                ms = eliminate(approx, e, order, cfg.max_entries)
                rows.append(TrialResult(
                    trial, "id", t, count_flips(truth, ms), avg_marginal_kl(truth, ms),
                    trace.iterations, trace.converged, approx_pct[t], ms.log_pr_e,
                ))

    meta = {
        "format": CSV_VERSION,
        "config": cfg.describe(),
        "network": {"name": net.name, "variables": net.n, "edges": len(net.edges())},
        "order": {"heuristic": order.heuristic, "sequence": [net.variables[v].name for v in order.order]},
        "original_normalized_max": base_stats.normalized_max,
        "plans": plan_info,
        "tie_breaks": {
            "argmax": "lowest state index",
            "elimination_order": "lowest variable id",
            "edge_selection": "largest bucket shrinkage, then cumulative shrinkage, "
                              "then smaller parent cardinality, then lowest (parent, child) ids",
        },
        "iterations": "ed rows report 0; bp/id means are capped at max_iters, "
                      "summary also lists the converged-only mean",
        "fallbacks": fallbacks,
        "skipped": skipped,
        "edge_selection": "independent of evidence" if not cfg.reselect_per_trial
                              else "reselected per trial (outside the reference protocol)",
    }
    return BenchmarkResult(rows, summarize(rows), meta)
