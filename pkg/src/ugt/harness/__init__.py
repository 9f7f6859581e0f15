"""Experiment orchestration, grid tuning, CSV output and SVG plots."""

from .experiment import ExperimentResult, ExperimentSpec, InvalidSpecError, resolve, run_experiment
from .plot import SchemaError, emit_plot
from .tuning import TuneResult, TuningError, tune

__all__ = [
    "ExperimentResult",
    "ExperimentSpec",
    "InvalidSpecError",
    "SchemaError",
    "TuneResult",
    "TuningError",
    "emit_plot",
    "resolve",
    "run_experiment",
    "tune",
]
