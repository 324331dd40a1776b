"""Gaussian entangled light in a pumped array of nonlinear waveguides.

Closed second-moment dynamics of spontaneous down-conversion in a 1-D
coupled-waveguide lattice with a single pumped guide, pairwise
entanglement via logarithmic negativity, pump phase-noise effects, and an
independent Monte-Carlo (Bogoliubov) cross-validation.
"""

__version__ = "0.1.0"

from .params import Case, InvariantViolationError, NonFiniteError, SimParams
from .moments import (
    DegenerateMoments,
    GeneralMoments,
    evolve,
    initial_vacuum,
    photon_number_profile,
    rhs_degenerate,
    rhs_general,
    rk4_step,
)
from .entanglement import (
    EntanglementMap,
    PairMoments,
    StationaryResult,
    SurvivalResult,
    SymplecticInvariants,
    covariance_from_moments,
    entanglement_map,
    full_covariance,
    global_purity_check,
    log_negativity,
    pair_log_negativity,
    pair_moments,
    stationary_logneg,
    survival_distance,
    symplectic_eigenvalues,
    symplectic_invariants,
)
from .reduced import (
    MemoryKernel,
    ReducedTrajectory,
    bessel_j,
    bisect_threshold,
    classify_growth,
    lattice_amplitude_green,
    memory_identity_residual,
    memory_kernel,
    reduced_parametric_growth,
    threshold_bracket_reduced,
)
from .oracle import (
    BogoliubovPropagator,
    OracleEstimate,
    PhasePath,
    ensemble_from_seed,
    ensemble_moments,
    phase_path_for,
    propagate_bogoliubov,
    sample_phase_path,
)

__all__ = [name for name in dir() if not name.startswith("_")]
