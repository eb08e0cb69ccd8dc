"""Python access to the fracvisc solvers, rate fits and subcommands."""

import json

from ._core import (
    INFINITY,
    Config,
    ConfigError,
    fit_rate,
    frac_laplacian,
    hopf_lax,
    run,
    selftest,
    solve,
)

__all__ = [
    "INFINITY",
    "Config",
    "ConfigError",
    "echo",
    "fit_rate",
    "frac_laplacian",
    "hopf_lax",
    "run",
    "selftest",
    "solve",
]


def echo(config):
    """Config echo as a dict (the `config` block of report.json)."""
    return json.loads(config.echo_json())
