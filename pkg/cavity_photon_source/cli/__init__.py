"""Command-line interface."""

from .main import cli
from .scenarios import cmd_analyze, cmd_design_pulse, cmd_report, cmd_simulate, prepare_scenario

__all__ = ["cli", "cmd_analyze", "cmd_design_pulse", "cmd_report", "cmd_simulate", "prepare_scenario"]
