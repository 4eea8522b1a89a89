"""Scenario files, presets, persistence and the command line."""

from .artifacts import (
    CSV_COLUMNS,
    read_checkpoint,
    read_timeseries,
    write_checkpoint,
    write_eigreport,
    write_timeseries,
)
from .experiments import PRESETS, preset, run_preset, simulate
from .scenario import Scenario, load_scenario, parse_scenario, serialize_scenario

__all__ = [
    "CSV_COLUMNS",
    "PRESETS",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "preset",
    "read_checkpoint",
    "read_timeseries",
    "run_preset",
    "serialize_scenario",
    "simulate",
    "write_checkpoint",
    "write_eigreport",
    "write_timeseries",
]
