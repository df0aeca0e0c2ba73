"""Limiting spectra of large sample covariance matrices.

Tools for the noise-plus-signal covariance model: exact support layout of
the limiting eigenvalue law (including when and where it splits into
separate intervals), its density and distribution function via Stieltjes
inversion, moment maps between population and limit, sensor-array snapshot
simulation, and signal-count detection.
"""

from .arraysim import (
    Scenario,
    SnapshotBatch,
    build_scenario,
    hermitian_eigenvalues,
    sample_covariance,
    sample_covariance_equiv,
    snapshots,
    steering_matrix,
)
from .detect import (
    DetectionMethod,
    DetectionResult,
    detect_blind,
    detect_model_based,
    estimate_sigma2,
)
from .dist import (
    DiscreteSpectrum,
    Histogram,
    StepDF,
    empirical_df,
    histogram,
    sup_distance,
)
from .errors import ConfigError, DomainError, NumericError
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    ScenarioConfig,
    emit_density_curve,
    parse_experiment_config,
    parse_scenario_config,
    run_experiment,
    scenario_from_config,
    write_report,
)
from .moments import (
    limit_moments_from_population,
    population_moments_from_limit,
    spectrum_moments,
)
from .rootfind import newton_bisect
from .stieltjes import (
    StieltjesSolution,
    eta_schedule,
    interval_mass,
    limiting_cdf,
    limiting_density,
    mp_density,
    solve_stieltjes,
)
from .support import (
    NoiseSignalModel,
    SupportInterval,
    SupportLayout,
    canonical_endpoints,
    critical_y,
    edge_curve,
    find_support_layout,
    model_from_spectrum,
    single_spike_critical_y,
    single_spike_split,
    split_criterion,
    split_exists,
    write_endpoints_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DetectionMethod",
    "DetectionResult",
    "DiscreteSpectrum",
    "DomainError",
    "ExperimentConfig",
    "ExperimentReport",
    "Histogram",
    "NoiseSignalModel",
    "NumericError",
    "Scenario",
    "ScenarioConfig",
    "SnapshotBatch",
    "StepDF",
    "StieltjesSolution",
    "SupportInterval",
    "SupportLayout",
    "build_scenario",
    "canonical_endpoints",
    "critical_y",
    "detect_blind",
    "detect_model_based",
    "edge_curve",
    "emit_density_curve",
    "empirical_df",
    "estimate_sigma2",
    "eta_schedule",
    "find_support_layout",
    "hermitian_eigenvalues",
    "histogram",
    "interval_mass",
    "limit_moments_from_population",
    "limiting_cdf",
    "limiting_density",
    "model_from_spectrum",
    "mp_density",
    "newton_bisect",
    "parse_experiment_config",
    "parse_scenario_config",
    "population_moments_from_limit",
    "run_experiment",
    "sample_covariance",
    "sample_covariance_equiv",
    "scenario_from_config",
    "single_spike_critical_y",
    "single_spike_split",
    "snapshots",
    "solve_stieltjes",
    "spectrum_moments",
    "split_criterion",
    "split_exists",
    "steering_matrix",
    "sup_distance",
    "write_endpoints_csv",
    "write_report",
    "__version__",
]
