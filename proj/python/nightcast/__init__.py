"""Election-night forecasting with optimized station groupings."""

from ._nightcast import (
    Dataset,
    Declarations,
    NoDeclaredStations,
    ParseError,
    ValidationError,
    all_declared,
    default_config,
    deviation_summary,
    estimate_transition,
    fitness,
    forecast,
    generate_synthetic,
    group_profile,
    kmeans_baseline,
    make_scenario,
    optimize,
    rmse,
)

__version__ = "0.3.0"

__all__ = [
    "Dataset",
    "Declarations",
    "NoDeclaredStations",
    "ParseError",
    "ValidationError",
    "all_declared",
    "default_config",
    "deviation_summary",
    "estimate_transition",
    "fitness",
    "forecast",
    "generate_synthetic",
    "group_profile",
    "kmeans_baseline",
    "make_scenario",
    "optimize",
    "rmse",
]
