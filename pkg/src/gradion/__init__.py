"""gradion: design and verification of microwave-driven ion-trap quantum
logic under a static magnetic field gradient.

The package computes linear-chain equilibria and axial normal modes,
hyperfine Zeeman shifts along the gradient, spin-phonon couplings and the
gradient needed for frequency-space addressing, Monte-Carlo gate-error
estimates from state-configuration frequency spreads, and time-domain
sideband dynamics in the gradient-displaced frame.
"""

__version__ = "0.1.0"

from .core import (
    CONSTANTS,
    ConfigError,
    IonSpecies,
    PhysicalConstants,
    TrapConfig,
    YB171,
    check_linearity,
    get_species,
    load_config,
    register_species,
    with_gradient,
)
from .crystal import (
    ChainSolution,
    ConvergenceError,
    highest_mode_empirical,
    length_scale,
    min_spacing,
    normal_modes,
    solve_chain,
    solve_equilibrium,
    spacing_law,
)
from .zeeman import (
    QubitLevels,
    breit_rabi_energy,
    kappa,
    kappa_difference,
    resonance_frequency,
    transition_frequency,
)
from .addressing import (
    ChainSpectrum,
    CouplingReport,
    DriveField,
    coupling_report,
    effective_lamb_dicke,
    epsilon_c,
    lamb_dicke,
    min_spectral_gap,
    required_gradient,
    spectrum,
    wavepacket_size,
)
from .fidelity import (
    GateErrorEstimate,
    SpreadEstimate,
    configuration_frequency,
    estimate_spread,
    gate_error_closed_form,
    gate_error_estimate,
    gate_error_numeric_oracle,
    state_dependent_forces,
)
from .dynamics import (
    DriveSpec,
    QuantumState,
    TruncationError,
    displacement_matrix,
    displacement_matrix_element,
    evolve,
    evolve_sampled,
    polaron_spectrum_check,
    polaron_transform_check,
    rabi_frequency_analytic,
    transformed_ladder_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
