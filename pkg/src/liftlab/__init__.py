"""liftlab: spectra of random permutation lifts of regular graphs.

Sample uniform n-lifts of a d-regular base graph, compute spectra of the
lifted adjacency operator and its centered counterpart, certify large
Rayleigh quotients with dyadic-valued vectors, reduce the resulting
combinatorial patterns, and bound matching probabilities.
"""

from .dyadic import (
    DyadicBandVector,
    DyadicScale,
    band_certificate,
    band_select,
    dyadic_certificate,
    dyadic_round,
    polarize,
    quad_form,
    quad_form_restricted,
)
from .errors import LiftlabError
from .experiment import (
    ExperimentConfig,
    ResultRow,
    explain_pipeline,
    run_cell,
    run_experiment,
)
from .graphs import (
    BaseGraph,
    Lift,
    LiftVector,
    apply_adjacency,
    apply_centered,
    apply_expected,
    balance,
    base_from_name,
    complete_graph,
    cycle_graph,
    cycle_power_graph,
    dense_operator,
    identity_lift,
    lifted_eigenvector,
    petersen_graph,
)
from .matching import (
    MatchingSpec,
    asymptotic_form,
    exact_log_probability,
    exact_probability_fraction,
    monte_carlo_probability,
)
from .patterns import (
    ClassGraph,
    ClassProfile,
    Pattern,
    ReductionReport,
    extract_pattern,
    peak_potency,
    potency,
    reduce_pattern,
)
from .sampling import SeededRng, plant_clique, sample_lift
from .spectra import SpectralReport, dense_spectrum, lambda_star
from .witnesses import (
    WitnessResult,
    bipartition_witness,
    clique_witness,
    embed_subgraph_witness,
    pattern_witness_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BaseGraph",
    "ClassGraph",
    "ClassProfile",
    "DyadicBandVector",
    "DyadicScale",
    "ExperimentConfig",
    "Lift",
    "LiftVector",
    "LiftlabError",
    "MatchingSpec",
    "Pattern",
    "ReductionReport",
    "ResultRow",
    "SeededRng",
    "SpectralReport",
    "WitnessResult",
    "apply_adjacency",
    "apply_centered",
    "apply_expected",
    "asymptotic_form",
    "balance",
    "band_certificate",
    "band_select",
    "base_from_name",
    "bipartition_witness",
    "clique_witness",
    "complete_graph",
    "cycle_graph",
    "cycle_power_graph",
    "dense_operator",
    "dense_spectrum",
    "dyadic_certificate",
    "dyadic_round",
    "embed_subgraph_witness",
    "exact_log_probability",
    "exact_probability_fraction",
    "explain_pipeline",
    "extract_pattern",
    "identity_lift",
    "lambda_star",
    "lifted_eigenvector",
    "monte_carlo_probability",
    "pattern_witness_bound",
    "peak_potency",
    "petersen_graph",
    "plant_clique",
    "polarize",
    "potency",
    "quad_form",
    "quad_form_restricted",
    "reduce_pattern",
    "run_cell",
    "run_experiment",
    "sample_lift",
    "__version__",
]
