"""Experiment runner behind the ``trackexp`` command."""
from .cli import main
from .config import ExperimentConfig, load_config, validate
from .runner import command_lowerbound, command_run, command_verify

__all__ = ["ExperimentConfig", "command_lowerbound", "command_run", "command_verify",
           "load_config", "main", "validate"]
