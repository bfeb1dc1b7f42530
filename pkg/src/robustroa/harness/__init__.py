"""Scenario configs, pipeline orchestration, and artifact emission."""

from .scenarios import ConfigError, Scenario, load_scenario

__all__ = ["ConfigError", "Scenario", "load_scenario"]
