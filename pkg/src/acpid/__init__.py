"""Online self-tuning PID control of a simulated quadrotor.

Each attitude and altitude channel runs an incremental PID whose gains are
corrected every step by a small network trained online through an
actor-critic identifier of the channel's response.
"""
from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version as _version

from .config import ScenarioConfig, load_config, parse_config
from .dynamics import QuadParams, QuadState
from .errors import ConfigurationError, DivergenceError, NumericalError, SaturationError
from .experiments import compare_table, emit_plots, run_scenario
from .loop import rmse, run_episode
from .tuner import TunerConfig

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DivergenceError", "NumericalError", "QuadParams", "QuadState", "SaturationError",
    "ScenarioConfig", "TunerConfig", "compare_table", "emit_plots", "load_config", "parse_config", "rmse",
    "run_episode", "run_scenario", "__version__",
]
