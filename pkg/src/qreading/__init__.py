"""Minimum-energy quantum reading of optical memories: planning, simulation and counting."""

__version__ = "0.1.0"

from .circuits import Circuit, DetectionDistribution, detection_probabilities, evolve, single_photon_unitary
from .fock import (
    BeamSplitter,
    Diagonalization,
    PhaseShifter,
    StateVector,
    apply_beamsplitter,
    device_overlap,
    diagonalize,
    make_noon_superposition,
    mean_photon_number,
)
from .reading import (
    Plan,
    brute_force_plan,
    error_probability,
    failure_probability,
    k_of_q,
    plan_ambiguous,
    plan_probe,
    plan_unambiguous,
    solve_xstar,
)
from .setups import (
    HypothesisPair,
    InfeasibleSetupError,
    SetupSpec,
    build_ambiguous,
    build_perfect,
    build_unambiguous,
    closed_form_probabilities,
)
from .experiment import (
    CountRecord,
    FrequencyRecord,
    Noise,
    RunConfig,
    SetupRef,
    deviation_report,
    frequencies,
    run_counts,
    sweep_reflectances,
)
