"""Napkin-graph ATE estimation: plug-in, estimating-equation, one-step and TMLE estimators."""

import json

from ._napkin import (
    Dataset,
    NapkinError,
    optimal_alpha_binary,
    population_truth,
    sample,
    scenario_ids,
)
from . import _napkin

__all__ = [
    "Dataset",
    "NapkinError",
    "estimate",
    "optimal_alpha_binary",
    "population_truth",
    "sample",
    "scenario_ids",
    "simulate",
]


def estimate(data, config, x0="ate"):
    """Runs the configured estimators; returns one result dict per estimator."""
    text = config if isinstance(config, str) else json.dumps(config)
    return [json.loads(r) for r in _napkin.estimate_json(data, text, str(x0))]


def simulate(scenario, seed, n=0, reps=0, threads=1, points=False):
    """Runs a built-in Monte Carlo scenario and returns the report as a dict."""
    return json.loads(_napkin.simulate_json(scenario, n, reps, seed, threads, points))
