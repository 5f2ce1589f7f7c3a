"""Pseudonymous billing and mutual authentication for online electric vehicles."""

from .config import ConfigError, ScenarioConfig, load_config
from .sim import reconcile, run_revocation, run_scenario

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "reconcile", "run_revocation", "run_scenario"]
__version__ = "0.1.0"
