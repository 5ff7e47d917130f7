"""Python bindings for the qpgp statevector simulator and trainer."""

import json as _json

from ._core import (
    Circuit,
    jacobian,
    load_dataset,
    model_circuit,
    param_shift_gradient,
    run_circuit,
    sample_subset,
    scaling_bench,
)
from ._core import default_config as _default_config
from ._core import run_experiment as _run_experiment

__all__ = [
    "Circuit",
    "default_config",
    "jacobian",
    "load_dataset",
    "model_circuit",
    "param_shift_gradient",
    "run_circuit",
    "run_experiment",
    "sample_subset",
    "scaling_bench",
]


def default_config(task):
    """Default experiment config for `task` as a dict."""
    return _json.loads(_default_config(task))


def run_experiment(config):
    """Train every seed in `config` (dict or JSON text); returns one summary dict per seed.

    Each summary carries the JSONL metrics trace under "trace" and the final
    parameters under "params".
    """
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_run_experiment(text))
