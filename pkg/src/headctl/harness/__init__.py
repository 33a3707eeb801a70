"""Experiment harness: configs, closed-loop runner, dataset capture, CLI."""

from .config import ExperimentConfig, Waypoint, preset
from .runner import (RunSummary, capture_dataset, emit_plot_data, overshoot, rise_time, run_experiment,
                     train_network, vision_demo)

__all__ = [
    "ExperimentConfig", "RunSummary", "Waypoint", "capture_dataset", "emit_plot_data", "overshoot", "preset",
    "rise_time", "run_experiment", "train_network", "vision_demo",
]
