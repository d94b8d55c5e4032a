"""Cavity-QED atom-photon entanglement gun simulator.

Evolves a driven four-level atom coupled to a two-mode optical cavity (and
its three-level Raman and reduced two-level variants) under both the full
master equation and the conditional no-jump dynamics, evaluates detection
probabilities, entanglement fidelity, state-mapping success and photon-gun
quality, and scans or optimizes the drive parameters.
"""

from .basis import (
    EFFECTIVE_TWO_LEVEL,
    FOUR_LEVEL,
    MODEL_KINDS,
    THREE_LEVEL_RAMAN,
    Basis,
    BasisState,
    annihilation_operator,
    atomic_projector,
    basis_vector,
    build_basis,
    expectation,
    number_operator,
)
from .errors import (
    ConfigError,
    IntegrationError,
    OptimizationError,
    UnreliableResultError,
    UnsaturatedHorizonError,
)
from .merits import (
    Bookkeeping,
    MeritReport,
    bell_fidelity,
    emission_rate,
    merit_report,
    photon_detection_probability,
    probability_bookkeeping,
    success_rate,
    transfer_peak_time,
)
from .model import (
    RAD_NS_PER_MHZ,
    ModelConfig,
    Pulse,
    RegimeReport,
    coherent_hamiltonian,
    conditional_hamiltonian,
    effective_two_level_hamiltonian,
    lindblad_rhs,
    raman_effective_rates,
    regime_report,
    stark_compensation_delta,
)
from .runconfig import RunConfig, canonical_text, parse_config
from .solve import (
    ConvergenceReport,
    IntegrationSpec,
    Trajectory,
    adiabatic_amplitudes,
    convergence_check,
    integrate_conditional,
    integrate_master,
)
from .sweep import (
    ADIABATIC_BOUNDS,
    DEFAULT_BOUNDS,
    OptimizeResult,
    SweepResult,
    SweepSpec,
    apply_parameter,
    compare_protocols,
    evaluate_objective,
    grid_sweep,
    gun_emission_rate,
    mapping_success_rate,
    optimize_inner,
)

__version__ = "0.1.0"
