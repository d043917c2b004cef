"""Shared community estimation across collections of non-aligned graphs.

The package fits one stochastic blockmodel to many graphs at once:
graphs of different sizes, with no node correspondence, assumed to draw
their edges from a common k x k connectivity matrix. A joint spectral
method clusters all graphs in one shared space; an isolated baseline
clusters each graph alone and aligns labels afterwards.
"""

from .generate import (
    Connectivity,
    GeneratorConfig,
    NegativeBinomialSizes,
    generate,
    load_theta,
    planted_partition,
    sample_graph,
    sample_pi,
    sample_sizes,
    save_generated,
    save_theta,
)
from .graphs import (
    Adjacency,
    ClusterCounts,
    GraphDataset,
    Membership,
    counts,
    load_dataset,
    load_membership,
    random_membership,
    save_dataset,
    save_membership,
)
from .isolated import ALIGNMENT_METHODS, IsoFit, align, fit_isolated, fit_single, kmeans
from .joint import FitOptions, JointFit, fit_joint
from .metrics import (
    EvalReport,
    ThetaEstimate,
    align_membership,
    ari,
    assignment_entropy,
    best_label_matching,
    estimate_theta_pooled,
    estimate_theta_single,
    evaluate_membership,
    individual_nmis,
    mcr,
    nmi,
    overall_nmi,
    sse,
    theta_variance,
    write_report,
)
from .spectral import (
    PopulationDecomposition,
    QStar,
    SpectralPair,
    adjacency_eigen,
    population_quantities,
    q_star,
    top_k_eigen,
)

__version__ = "0.1.0"

__all__ = [
    "Adjacency",
    "ALIGNMENT_METHODS",
    "ClusterCounts",
    "Connectivity",
    "EvalReport",
    "FitOptions",
    "GeneratorConfig",
    "GraphDataset",
    "IsoFit",
    "JointFit",
    "Membership",
    "NegativeBinomialSizes",
    "PopulationDecomposition",
    "QStar",
    "SpectralPair",
    "adjacency_eigen",
    "align",
    "align_membership",
    "ari",
    "assignment_entropy",
    "best_label_matching",
    "counts",
    "estimate_theta_pooled",
    "estimate_theta_single",
    "evaluate_membership",
    "fit_isolated",
    "fit_joint",
    "fit_single",
    "generate",
    "individual_nmis",
    "kmeans",
    "load_dataset",
    "load_membership",
    "load_theta",
    "mcr",
    "nmi",
    "overall_nmi",
    "planted_partition",
    "population_quantities",
    "q_star",
    "random_membership",
    "sample_graph",
    "sample_pi",
    "sample_sizes",
    "save_dataset",
    "save_generated",
    "save_membership",
    "save_theta",
    "sse",
    "theta_variance",
    "top_k_eigen",
    "write_report",
]
