"""Spectral norm of the coupled Erdos-Renyi process: sampling, eigensolvers,
closed-form bounds and Monte Carlo audits."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import run_experiment as _run_experiment


def run(config):
    """Run an experiment from a config dict; returns (csv_text, report_dict, exit_code)."""
    csv, report, code = _run_experiment(_json.dumps(config))
    return csv, _json.loads(report), code
