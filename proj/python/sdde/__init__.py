"""Solver and parameter sensitivities for delay equations with state-dependent delay."""

from ._core import ConfigError, HypothesisError, Problem, SddeError, run

__all__ = ["ConfigError", "HypothesisError", "Problem", "SddeError", "run"]
