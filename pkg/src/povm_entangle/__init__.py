"""Certify entangled measurements from detector tomography data.

The package reconstructs two-qubit POVMs from coincidence counts, brings
each element to a Pauli standard form by local filtering, derives the
optimal product-state quasidistribution whose negativities certify an
entangled measurement, propagates counting statistics by Monte Carlo
resampling, and evaluates probe-state witnesses for multipartite and qudit
detector outcomes.
"""

from .errors import ConvergenceError, ValidationError
from .montecarlo import (
    ElementUncertainty,
    McConfig,
    UncertaintyReport,
    counting_covariance,
    covariance_factor,
    gaussian_draws,
    match_grid,
    project_probabilities,
    propagate,
    sample_frequencies,
)
from .operators import (
    HermitianOperator,
    PauliCorrelationMatrix,
    PovmSet,
    bell_povm,
    bell_state,
    bloch_vector,
    ghz_state,
    lambda_operator,
    me_state,
    min_eigenvalue,
    noisy_ghz_element,
    noisy_me_element,
    partial_transpose,
    pauli_compose,
    pauli_eigenstate,
    pauli_expand,
)
from .quasidist import (
    LABELS,
    NegativityReport,
    QuasiDistribution,
    ideal_bell_reference,
    negativity_report,
    optimal_quasidistribution,
    quasidistribution_from_pi,
)
from .simulate import (
    DetectorModel,
    bell_model,
    draw_counts,
    effective_elements,
    expected_frequencies,
    model_from_spec,
    model_to_spec,
)
from .standard_form import (
    FormConfig,
    LocalTransform,
    StandardForm,
    TildeDecomposition,
    back_transform,
    diagonalize_correlations,
    remove_local_terms,
    so3_from_su2,
    standard_operator,
    su2_from_so3,
    to_standard_form,
)
from .tomography import (
    BasisMap,
    CoincidenceCounts,
    RelativeFrequencies,
    closest_bell_labels,
    combine_outcomes,
    physicality_correct,
    reconstruct_correlations,
    reconstruct_povm,
    relative_frequencies,
    sampling_matrices,
)
from .witness import (
    ProbeState,
    SeparabilityResult,
    WitnessResult,
    ghz_probe,
    lambda_gmax_analytic,
    me_probe,
    noise_threshold,
    separability_eigenvalue_numeric,
    witness_evaluate,
)

__version__ = "0.1.0"

__all__ = [
    "BasisMap",
    "CoincidenceCounts",
    "ConvergenceError",
    "DetectorModel",
    "ElementUncertainty",
    "FormConfig",
    "HermitianOperator",
    "LABELS",
    "LocalTransform",
    "McConfig",
    "NegativityReport",
    "PauliCorrelationMatrix",
    "PovmSet",
    "ProbeState",
    "QuasiDistribution",
    "RelativeFrequencies",
    "SeparabilityResult",
    "StandardForm",
    "TildeDecomposition",
    "UncertaintyReport",
    "ValidationError",
    "WitnessResult",
    "back_transform",
    "bell_model",
    "bell_povm",
    "bell_state",
    "bloch_vector",
    "closest_bell_labels",
    "combine_outcomes",
    "counting_covariance",
    "covariance_factor",
    "diagonalize_correlations",
    "draw_counts",
    "effective_elements",
    "expected_frequencies",
    "gaussian_draws",
    "ghz_probe",
    "ghz_state",
    "ideal_bell_reference",
    "lambda_gmax_analytic",
    "lambda_operator",
    "match_grid",
    "me_probe",
    "me_state",
    "min_eigenvalue",
    "model_from_spec",
    "model_to_spec",
    "negativity_report",
    "noise_threshold",
    "noisy_ghz_element",
    "noisy_me_element",
    "optimal_quasidistribution",
    "partial_transpose",
    "pauli_compose",
    "pauli_eigenstate",
    "pauli_expand",
    "physicality_correct",
    "project_probabilities",
    "propagate",
    "quasidistribution_from_pi",
    "reconstruct_correlations",
    "reconstruct_povm",
    "relative_frequencies",
    "remove_local_terms",
    "sample_frequencies",
    "sampling_matrices",
    "separability_eigenvalue_numeric",
    "so3_from_su2",
    "standard_operator",
    "su2_from_so3",
    "to_standard_form",
    "witness_evaluate",
]
