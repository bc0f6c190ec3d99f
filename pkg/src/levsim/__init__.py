"""Simulation and analysis of two optically coupled levitated nanoparticles.

The package integrates the coupled quadrature SDEs (and the underlying
second-order oscillator model) for a pair of trapped particles with
non-reciprocal optical binding, and compares ensemble statistics against
closed-form stationary Fokker-Planck solutions: thermal squeezed states,
phase-space rings (random-phase coherent states), and bistable parameter
sets.

Typical use::

    from levsim import scenario_params, SimConfig, run_ensemble
    sp = scenario_params("squeeze")
    ens = run_ensemble(SimConfig(t_end=50.0, burn_in=10.0,
                                 n_trajectories=200, record_stride=500), sp)

or from the command line: ``levsim --scenario squeeze --out results/``.
"""

from .params import (
    CouplingCoefficients,
    InvalidParameterError,
    OpticalSetup,
    ScenarioParams,
    VALID_SCENARIOS,
    coupling_coefficients,
    coupling_rate_s,
    is_unidirectional,
    modulating_constant,
    scenario_defaults,
    scenario_params,
)
from .dynamics import (
    NoiseSpec,
    OscillatorState,
    QuadratureState,
    full_oscillation_drift,
    quadrature_potential,
    quadrature_potential_gradient,
    slow_flow_diffusion,
    slow_flow_drift,
)
from .fp_oracle import (
    DegenerateDensityError,
    NonIntegrableDensityError,
    QuadratureError,
    StationaryDensity,
    ValidityError,
    analytic_fidelity,
    analytic_phonon,
    analytic_variances,
    moment,
    stationary_density_p1,
    stationary_density_p2,
)
from .integrator import (
    Ensemble,
    InitialState,
    IntegratorBlowupError,
    SimConfig,
    Trajectory,
    full_oscillation_noise_amplitudes,
    run_ensemble,
    simulate_trajectory,
    step_euler_maruyama,
    step_heun,
)
from .analysis import (
    CoherenceResult,
    PhaseSpaceHistogram,
    PhononReport,
    VarianceReport,
    WitnessReport,
    coherence_decay_rate,
    demodulate_ensemble,
    distribution_distance,
    ensemble_variances,
    fidelity_numeric,
    histogram2d,
    mode_detect,
    phonon_population,
    second_order_coherence,
    unidirectionality_witness,
)

__version__ = "0.1.0"

__all__ = [
    "CouplingCoefficients", "InvalidParameterError", "OpticalSetup",
    "ScenarioParams", "VALID_SCENARIOS", "coupling_coefficients",
    "coupling_rate_s", "is_unidirectional", "modulating_constant",
    "scenario_defaults", "scenario_params",
    "NoiseSpec", "OscillatorState", "QuadratureState",
    "full_oscillation_drift", "quadrature_potential",
    "quadrature_potential_gradient", "slow_flow_diffusion",
    "slow_flow_drift",
    "DegenerateDensityError", "NonIntegrableDensityError",
    "QuadratureError", "StationaryDensity", "ValidityError",
    "analytic_fidelity", "analytic_phonon", "analytic_variances", "moment",
    "stationary_density_p1", "stationary_density_p2",
    "Ensemble", "InitialState", "IntegratorBlowupError", "SimConfig",
    "Trajectory", "full_oscillation_noise_amplitudes", "run_ensemble",
    "simulate_trajectory", "step_euler_maruyama", "step_heun",
    "CoherenceResult", "PhaseSpaceHistogram", "PhononReport",
    "VarianceReport", "WitnessReport", "coherence_decay_rate",
    "demodulate_ensemble", "distribution_distance", "ensemble_variances",
    "fidelity_numeric", "histogram2d", "mode_detect", "phonon_population",
    "second_order_coherence", "unidirectionality_witness",
    "__version__",
]
