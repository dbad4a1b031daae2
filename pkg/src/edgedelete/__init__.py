"""Approximate inference in discrete Bayesian networks by evidence-sensitive edge deletion."""

from .bp import BPResult, loopy_bp
from .deletion import (
    DeletionPlan,
    EdgeRef,
    FixedPointTrace,
    apply_plan,
    auxiliary_root_form,
    delete_edge,
    run_ed,
    run_id,
    run_vanengelen,
    select_edges,
)
from .elimination import (
    ClusterStats,
    EliminationOrder,
    MarginalSet,
    cluster_stats,
    compute_order,
    eliminate,
    posterior_factor,
)
from .errors import (
    ImpossibleEvidenceError,
    NetworkError,
    NormalizationWarning,
    ScaleGuardError,
    UnreachableThresholdError,
)
from .factor import Factor
from .io import load_network, parse_network, save_network, serialize_network
from .kl import (
    BoundReport,
    appendix_b_network,
    bound_report,
    check_deterministic,
    entropy,
    entropy_given_e,
    kl,
    theorem4_kl,
    theorem4_kl_deterministic,
)
from .network import BayesianNetwork, Evidence, Variable, make_network
from .oracle import JointPosterior, joint_enumerate

__all__ = [
    "BPResult", "BayesianNetwork", "BoundReport", "ClusterStats", "DeletionPlan",
    "EdgeRef", "EliminationOrder", "Evidence", "Factor", "FixedPointTrace",
    "ImpossibleEvidenceError", "JointPosterior", "MarginalSet", "NetworkError",
    "NormalizationWarning", "ScaleGuardError", "UnreachableThresholdError", "Variable",
    "appendix_b_network", "apply_plan", "auxiliary_root_form", "bound_report",
    "check_deterministic", "cluster_stats", "compute_order", "delete_edge", "eliminate",
    "entropy", "entropy_given_e", "joint_enumerate", "kl", "load_network", "loopy_bp",
    "make_network", "parse_network", "posterior_factor", "run_ed", "run_id",
    "run_vanengelen", "save_network", "select_edges", "serialize_network",
    "theorem4_kl", "theorem4_kl_deterministic",
]
