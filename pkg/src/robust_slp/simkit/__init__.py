"""Monte Carlo experiments, validation oracles and reporting."""

from robust_slp.simkit.config import ScenarioConfig
from robust_slp.simkit.engines import (
    GridPoint,
    benchmark_runtime,
    build_grid,
    curve_crossing,
    median_of_means,
    run_feasibility,
    run_power_sweep,
    run_ser,
    run_validation,
)
from robust_slp.simkit.report import MetricsReport, version_string
from robust_slp.simkit.validation import (
    ChanceReport,
    WorstCaseReport,
    angular_infimum,
    binomial_std,
    validate_chance,
    validate_worst_case,
)

__all__ = [
    "ChanceReport",
    "GridPoint",
    "MetricsReport",
    "ScenarioConfig",
    "WorstCaseReport",
    "angular_infimum",
    "benchmark_runtime",
    "binomial_std",
    "build_grid",
    "curve_crossing",
    "median_of_means",
    "run_feasibility",
    "run_power_sweep",
    "run_ser",
    "run_validation",
    "validate_chance",
    "validate_worst_case",
    "version_string",
]
