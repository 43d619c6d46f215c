"""Robust graph filter design under random edge perturbations and input noise."""

from .errors import (
    CapExceeded,
    DegenerateSpectrum,
    GenerationFailed,
    InvalidNominal,
    RobustGFError,
    SingularSystem,
)
from .estimators import Enumeration, MonteCarlo
from .fir import (
    FirDesign,
    VandermondeSystem,
    apply_fir,
    averaged_fir_error,
    design_robust_fir,
    expected_gram,
    expected_rhs,
    fir_filter_matrix,
    fit_taps_to_mask,
    vandermonde,
)
from .graph import (
    EigenSystem,
    Graph,
    build_incidence,
    build_laplacian,
    eigendecompose,
    generate_er,
    generate_sbm,
    graph_from_json,
    graph_to_json,
    laplacian,
    load_graph,
)
from .moments import WeightedBernoulliSum, expected_power_sums, mixed_expectation, moments
from .noisy import (
    NoisyDesignProblem,
    TradeoffPoint,
    design_noisy_robust_fir,
    evaluate_tradeoff,
    lowfreq_signal,
    output_error,
)
from .oracle import (
    OracleReport,
    exact_perturbed_eigs,
    expectation_over_realizations,
    first_order_quality,
)
from .perturbation import (
    FirstOrderCorrections,
    PerturbationModel,
    PerturbedEdge,
    Realization,
    approx_perturbed_eigs,
    delta_laplacian,
    empty_realization,
    enumerate_realizations,
    first_order_eigen,
    full_realization,
    model_from_json,
    model_to_json,
    sample_realization,
)
from .spectral import (
    averaged_mask_error,
    build_ideal_mask,
    filter_matrix,
    optimal_robust_mask,
    transformed_target,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceeded", "DegenerateSpectrum", "GenerationFailed", "InvalidNominal",
    "RobustGFError", "SingularSystem",
    "Enumeration", "MonteCarlo",
    "FirDesign", "VandermondeSystem", "apply_fir", "averaged_fir_error",
    "design_robust_fir", "expected_gram", "expected_rhs", "fir_filter_matrix",
    "fit_taps_to_mask", "vandermonde",
    "EigenSystem", "Graph", "build_incidence", "build_laplacian", "eigendecompose",
    "generate_er", "generate_sbm", "graph_from_json", "graph_to_json", "laplacian",
    "load_graph",
    "WeightedBernoulliSum", "expected_power_sums", "mixed_expectation", "moments",
    "NoisyDesignProblem", "TradeoffPoint", "design_noisy_robust_fir",
    "evaluate_tradeoff", "lowfreq_signal", "output_error",
    "OracleReport", "exact_perturbed_eigs", "expectation_over_realizations",
    "first_order_quality",
    "FirstOrderCorrections", "PerturbationModel", "PerturbedEdge", "Realization",
    "approx_perturbed_eigs", "delta_laplacian", "empty_realization",
    "enumerate_realizations", "first_order_eigen", "full_realization",
    "model_from_json", "model_to_json", "sample_realization",
    "averaged_mask_error", "build_ideal_mask", "filter_matrix",
    "optimal_robust_mask", "transformed_target",
    "__version__",
]
