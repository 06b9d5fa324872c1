"""Calibration and simulation toolkit for behavioral-finance parameters."""

from behavcal.core import (
    DEFAULT_BENCHMARKS,
    Benchmark,
    Bias,
    ParameterVector,
    Profile,
    ProfileKind,
    anchored_valuation,
    forecast_return,
    perceived_sd,
    value,
    weight_probability,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BENCHMARKS",
    "Benchmark",
    "Bias",
    "ParameterVector",
    "Profile",
    "ProfileKind",
    "anchored_valuation",
    "forecast_return",
    "perceived_sd",
    "value",
    "weight_probability",
]
