"""Command-line entry point: ``edgedelete {exact,bp,delete,bounds,bench,generate}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bench import TrialConfig, run_benchmark
from .bp import loopy_bp
from .deletion import DeletionPlan, run_ed, run_id, run_vanengelen, select_edges
from .elimination import EliminationOrder, MarginalSet, cluster_stats, compute_order, eliminate
from .errors import ImpossibleEvidenceError, NetworkError, ScaleGuardError, UnreachableThresholdError
from .generate import random_multiply_connected, random_network
from .io import load_evidence, load_network, save_network
from .kl import bound_report
from .network import BayesianNetwork, Evidence

ORDER_NAMES = {"minfill": "min-fill", "min-fill": "min-fill", "minsize": "min-size", "min-size": "min-size"}


def _evidence(args, net: BayesianNetwork) -> Evidence:
    return load_evidence(args.evidence, net) if args.evidence else Evidence()


def _order(spec: str, net: BayesianNetwork) -> EliminationOrder:
    if spec in ORDER_NAMES:
        return compute_order(net, ORDER_NAMES[spec])
    names = json.loads(Path(spec).read_text())
    return compute_order(net, "explicit", [net.index(n) for n in names])


def _write_marginals(path, net: BayesianNetwork, ms: MarginalSet, header: dict) -> None:
    out = open(path, "w", newline="") if path and path != "-" else sys.stdout
    try:
        out.write("# " + ",".join(f"{k}={v}" for k, v in header.items()) + "\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["variable", "state", "probability", "observed"])
        for v in range(net.n):
            var = net.variables[v]
            for s, p in enumerate(ms[v]):
                writer.writerow([var.name, var.states[s], repr(float(p)), "true" if v in ms.evidence else "false"])
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_exact(args) -> int:
    net = load_network(args.network)
    e = _evidence(args, net)
    order = _order(args.order, net)
    ms = eliminate(net, e, order, args.max_entries)
    stats = cluster_stats(net, order)
    _write_marginals(args.out, net, ms, {
        "ln_pr_e": repr(ms.log_pr_e),
        "normalized_max": repr(stats.normalized_max),
        "order": order.heuristic,
    })
    return 0


def cmd_bp(args) -> int:
    net = load_network(args.network)
    e = _evidence(args, net)
    res = loopy_bp(net, e, args.tol, args.max_iters, args.damping)
    _write_marginals(args.out, net, res.marginals, {
        "iterations": res.iterations,
        "converged": "true" if res.converged else "false",
        "max_residual": repr(res.max_residual),
    })
    return 0


def cmd_delete(args) -> int:
    net = load_network(args.network)
    e = _evidence(args, net)
    order = _order(args.order, net)
    plan = select_edges(net, order, args.threshold, not args.allow_multi)
    report = {
        "mode": args.mode,
        "threshold": args.threshold,
        "order": order.heuristic,
        "original_normalized_max": cluster_stats(net, order).normalized_max,
    }
    if args.mode == "ed":
        approx, plan = run_ed(net, e, plan, order, args.max_entries)
    elif args.mode == "id":
        approx, trace = run_id(net, e, plan, args.epsilon, args.max_iters, order, args.max_entries)
        plan = plan.with_replacements(trace.replacements)
        report.update(iterations=trace.iterations, converged=trace.converged,
                      final_change=trace.final_change)
    else:
        approx, plan = run_vanengelen(net, plan, order, args.max_entries)
    report["approx_normalized_max"] = cluster_stats(approx, order).normalized_max
    report["deleted"] = [edge.label(net) for edge in plan.edges]
    if args.emit_network:
        save_network(approx, args.emit_network)
    if args.emit_plan:
        Path(args.emit_plan).write_text(json.dumps(plan.to_dict(net), indent=1) + "\n")
    print(json.dumps(report, indent=1))
    return 0


def cmd_bounds(args) -> int:
    net = load_network(args.network)
    approx = load_network(args.approx_network)
    e = _evidence(args, net)
    plan = DeletionPlan.from_dict(json.loads(Path(args.plan).read_text()), net)
    report = bound_report(net, approx, plan, e, compute_exact=args.exact)
    print(json.dumps(report.to_dict(), indent=1))
    return 0


def cmd_bench(args) -> int:
    cfg = TrialConfig(
        network=args.network,
        thresholds=[float(t) for t in args.thresholds.split(",") if t.strip()] if args.thresholds else [],
        trials=args.trials,
        seed=args.seed,
        methods=[m.strip() for m in args.methods.split(",") if m.strip()],
        tol=args.tol,
        max_iters=args.max_iters,
        order=ORDER_NAMES.get(args.order, args.order),
        allow_multi=args.allow_multi,
        reselect_per_trial=args.reselect_per_trial,
    )
    if cfg.order not in ("min-fill", "min-size"):
        net = cfg.load()
        cfg.order = list(_order(args.order, net).order)
    result = run_benchmark(cfg)
    result.write(args.out)
    sys.stdout.write(result.summary_csv())
    return 0


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    make = random_multiply_connected if args.loopy else random_network
    net = make(rng, args.variables, cards=(args.min_card, args.max_card),
               max_parents=args.max_parents, edge_prob=args.edge_prob)
    save_network(net, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgedelete", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, evidence=True):
        p.add_argument("--network", required=True, help="network file (.json, or .bif)")
        if evidence:
            p.add_argument("--evidence", help="JSON object mapping variable names to states")

    p = sub.add_parser("exact", help="posterior marginals by bucket elimination")
    common(p)
    p.add_argument("--order", default="minfill", help="minfill, minsize, or a JSON file of names")
    p.add_argument("--out", default="-")
    p.add_argument("--max-entries", type=int, default=2**28)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bp", help="loopy belief propagation")
    common(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bp)

    p = sub.add_parser("delete", help="delete edges to meet a cluster-size threshold")
    common(p)
    p.add_argument("--threshold", type=float, required=True, help="log2 of the bucket entry cap")
    p.add_argument("--mode", choices=("ed", "id", "vanengelen"), default="ed")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--order", default="minfill")
    p.add_argument("--allow-multi", action="store_true",
                   help="allow several deleted parents per child (no bound reported)")
    p.add_argument("--max-entries", type=int, default=2**28)
    p.add_argument("--emit-network")
    p.add_argument("--emit-plan")
    p.set_defaults(func=cmd_delete)

    p = sub.add_parser("bounds", help="KL bound report for a deletion")
    common(p)
    p.add_argument("--approx-network", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--exact", action="store_true", help="also compute the exact KL by enumeration")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bench", help="run the BP / ED / ID comparison")
    common(p, evidence=False)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--thresholds", default="")
    p.add_argument("--methods", default="bp,ed,id")
    p.add_argument("--order", default="minfill")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--allow-multi", action="store_true")
    p.add_argument("--reselect-per-trial", action="store_true",
                   help="experimental: re-run edge selection for every trial")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a random network in JSON form")
    p.add_argument("--variables", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-card", type=int, default=2)
    p.add_argument("--max-card", type=int, default=3)
    p.add_argument("--max-parents", type=int, default=3)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--loopy", action="store_true", help="require an undirected cycle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NetworkError, ImpossibleEvidenceError, ScaleGuardError,
            UnreachableThresholdError, FileNotFoundError) as exc:
        print(f"edgedelete: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
