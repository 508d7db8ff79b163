"""Deterministic, seeded scenario builders and their assertion sets."""

from rtlab.scenarios.base import (REGISTRY, Check, Scenario, ScenarioResult, ScenarioSpec, build_scenario,
                                  get_spec, run_scenario)
from rtlab.scenarios import library  # noqa: F401

__all__ = ["REGISTRY", "Check", "Scenario", "ScenarioResult", "ScenarioSpec", "build_scenario", "get_spec",
           "run_scenario"]
