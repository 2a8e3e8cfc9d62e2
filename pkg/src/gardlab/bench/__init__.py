"""Experiment harness: configs, runners and the ``bench`` command line."""
from .config import PRESETS, ConfigError, ExperimentConfig, from_dict, load_config, preset_config
from .experiments import RUNNERS, TrialOutcome, find_crossing, run, summarize

__all__ = ["PRESETS", "ConfigError", "ExperimentConfig", "from_dict", "load_config",
           "preset_config", "RUNNERS", "TrialOutcome", "find_crossing", "run", "summarize"]
