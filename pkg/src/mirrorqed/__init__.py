"""Microwave reflection off transmon atoms before a mirror.

Models N flux-tunable transmon qubits coupled at fixed positions to a
semi-infinite transmission line terminated by a mirror. The mirror imposes
cosine mode functions, so each atom's radiative decay and the photon-mediated
inter-atom rates depend on position and frequency; a weak coherent probe
reflects with a complex amplitude computed from the steady state of a
Lindblad master equation. The package covers the pipeline from circuit
parameters (EC, EJ, beta, x) to reflection spectra, dip extraction,
anti-crossing splittings, and line-velocity calibration, with a JSON-config
CLI for sweeps.
"""

__version__ = "0.1.0"

from .coupling import (
    CouplingMatrices,
    OperatingPoint,
    alpha,
    collective_lamb_shift,
    delta_nm,
    gamma_nm,
    probe_detuning,
    symmetrize,
)
from .errors import (
    ConfigError,
    FitConvergenceError,
    InsufficientDipsError,
    MirrorQEDError,
    RegisterCapacityError,
    SingularSystemError,
    SolverError,
    StepFailureError,
    TransmonRegimeError,
    UnreachableFrequencyError,
    VelocityInconsistencyError,
    ZeroDriveError,
)
from .liouvillian import (
    Superoperator,
    build_generator,
    devectorize,
    embed,
    vectorize,
)
from .observables import (
    DipReport,
    ReflectionPoint,
    analytic_single_atom_reflection,
    extract_splitting,
    find_dips,
    fit_single_atom,
    reflection,
    splitting_from_dips,
    total_decoherence,
)
from .solver import steady_state, time_evolve, validate_density_matrix
from .sweep import (
    ExperimentConfig,
    SweepResult,
    calibrate_velocity,
    emit,
    run_power_sweep,
    run_spectrum,
    run_sweep2d,
    saturation_knee,
)
from .transmon import (
    ProbeSpec,
    TransmonSpec,
    WaveguideSpec,
    bare_decay_rate,
    coupling_strength,
    flux_for_frequency,
    josephson_energy,
    power_to_voltage,
    rabi_frequency,
    transition_frequency,
    voltage_to_power,
)

__all__ = [
    "__version__",
    "CouplingMatrices",
    "OperatingPoint",
    "alpha",
    "collective_lamb_shift",
    "delta_nm",
    "gamma_nm",
    "probe_detuning",
    "symmetrize",
    "ConfigError",
    "FitConvergenceError",
    "InsufficientDipsError",
    "MirrorQEDError",
    "RegisterCapacityError",
    "SingularSystemError",
    "SolverError",
    "StepFailureError",
    "TransmonRegimeError",
    "UnreachableFrequencyError",
    "VelocityInconsistencyError",
    "ZeroDriveError",
    "Superoperator",
    "build_generator",
    "devectorize",
    "embed",
    "vectorize",
    "DipReport",
    "ReflectionPoint",
    "analytic_single_atom_reflection",
    "extract_splitting",
    "find_dips",
    "fit_single_atom",
    "reflection",
    "splitting_from_dips",
    "total_decoherence",
    "steady_state",
    "time_evolve",
    "validate_density_matrix",
    "ExperimentConfig",
    "SweepResult",
    "calibrate_velocity",
    "emit",
    "run_power_sweep",
    "run_spectrum",
    "run_sweep2d",
    "saturation_knee",
    "ProbeSpec",
    "TransmonSpec",
    "WaveguideSpec",
    "bare_decay_rate",
    "coupling_strength",
    "flux_for_frequency",
    "josephson_energy",
    "power_to_voltage",
    "rabi_frequency",
    "transition_frequency",
    "voltage_to_power",
]
