"""Leak detection and state estimation for a three-tank cascade."""

from ._core import (
    Error,
    ExperimentConfig,
    NumericalError,
    ScalingParams,
    StateSpace,
    TankParams,
    ThresholdKind,
    ValidationError,
    build_faulty,
    build_healthy,
    build_threshold,
    characteristic_polynomial,
    controllability_matrix,
    detect_scenarios,
    discretize_zoh,
    eigenvalues,
    initial_error_bound,
    is_asymptotically_stable,
    load_config,
    observability_matrix,
    parse_config,
    place_observer_poles,
    run_askf,
    run_consensus,
    run_experiment,
    simulate,
    steady_state,
    transfer_function,
)

__all__ = [name for name in dir() if not name.startswith("_")]
