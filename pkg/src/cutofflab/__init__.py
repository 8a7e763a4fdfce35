"""Numerical laboratory for spectral cut-off Hamiltonian dynamics.

Builds reference operators with explicit eigenbases, compresses
time-dependent Hamiltonians onto spectral cut-off subspaces, computes
time-sliced unitary propagators with convergence and stability diagnostics,
extracts Floquet-Magnus effective Hamiltonians for periodic drives, and
evaluates regularized cut-off traces on solvable models.
"""

from .spectral_model import (
    CutoffSpace,
    ElementProvider,
    ScaleVector,
    SpectralModel,
    build_model,
    cutoff_space,
    project,
    scale_weights,
    sobolev_norm,
    tail_norm,
)
from .hamiltonian import (
    COEFFICIENTS,
    CutoffHamiltonian,
    HamiltonianFamily,
    apply_family,
    assemble_family,
    cutoff_matrix,
    operator_norm_bound,
    word_apply,
)
from .propagator import (
    Partition,
    PropagatorMatrix,
    commutator_constant,
    convergence_sweep_N,
    cutoff_propagator,
    duhamel_bound,
    energy_stability_check,
    expm_step,
    reference_solution,
    reference_with_self_check,
    slicing_order_sweep,
    time_sliced_propagator,
)
from .floquet import (
    FloquetResult,
    FMExpansion,
    effective_group_convergence,
    effective_hamiltonian,
    fm_coefficient,
    fm_convergence_sweep,
    fm_expansion,
    monodromy,
    rescaled_family,
    stroboscopic_error,
)
from .traces import (
    BandedOperator,
    PowerDiagonal,
    TraceFit,
    cutoff_trace,
    fit_finite_part,
    heat_trace,
    regularized_amplitude,
    trace_defect,
    zeta_value,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    config_from_dict,
    list_experiments,
    load_config,
    run_experiment,
    validate_config,
)

__version__ = "0.1.0"
