"""Multisine power-waveform design against a nonlinear rectenna model."""

from .quadrature import (
    PeriodMean,
    QuadratureConfig,
    QuadratureToleranceError,
    config_for_cycles,
    period_log_mean_exp,
    period_mean,
    period_mean_array,
    period_mean_weighted,
)

__all__ = [
    "PeriodMean",
    "QuadratureConfig",
    "QuadratureToleranceError",
    "config_for_cycles",
    "period_log_mean_exp",
    "period_mean",
    "period_mean_array",
    "period_mean_weighted",
]

__version__ = "0.1.0"
