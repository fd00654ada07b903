"""Simulation, estimation, and experiment design for Pauli-family quantum channels."""

from .channel import (
    AffineChoiBasis,
    ChoiMatrix,
    ChoiVerdict,
    CptpVerdict,
    GenPauliChannel,
    PauliChannel,
    affine_basis_qubit,
    affine_basis_qutrit,
    cascade,
    channel_from_dict,
    channel_to_dict,
    choi,
    choi_validate,
    conditional_expectation,
    cptp_check_gen,
    cptp_check_qubit,
    trace_over_output,
)
from .design import (
    DesignSearchResult,
    FisherMatrix,
    OptimalDesign,
    fisher_matrix,
    fisher_qubit,
    fisher_trace,
    optimal_configs_qubit,
    search_optimal_configs,
)
from .errors import (
    DegenerateIterateError,
    DimensionError,
    InfeasibleRegionError,
    InvalidChannelError,
    InvalidMeasurementError,
    InvalidStateError,
    NonConvergenceError,
    PartialResultError,
    SingularConfigurationError,
    ToolkitError,
    ValidationError,
)
from .estimate import (
    AffineEstimate,
    ChoiEstimate,
    DirectionEstimate,
    TomographyConfiguration,
    direction_config,
    estimate_affine,
    estimate_choi,
    estimate_directions,
    estimate_optimal_closed_form,
    exact_freqs,
    normalize_project,
    relative_freqs,
    simulate_record,
    simulate_state_tomography,
)
from .harness import (
    CaseStudyResult,
    CaseStudySpec,
    MetricsRow,
    RobustnessRow,
    empirical_stats,
    hs_error,
    robustness_sweep,
    rotate_bloch,
    run_case_study,
)
from .qstate import (
    DensityMatrix,
    MeasurementRecord,
    Mub,
    Povm,
    basis_povm,
    bloch_to_density,
    config_matrix,
    density_to_bloch,
    mub_from_directions,
    outcome_probs,
    projective_povm,
    rng_from_seed,
    sample_record,
    standard_mub,
    substream,
    tetrahedron_povm,
)
from .solver import (
    DykstraResult,
    LinearInequalitySet,
    SolverSettings,
    dykstra_cptp,
    gen_lambda_constraints,
    pgd_choi_ls,
    pgd_ls,
    project_polytope,
    project_psd,
    project_tp,
    qubit_lambda_constraints,
)

__version__ = "0.1.0"
