"""Decay rate, level shift and amplitude dynamics of a moving atom in dispersive media."""

import json
from pathlib import Path

from ._relemit import (
    ConfigurationError,
    ConvergenceError,
    RelemitError,
    ValidationError,
    __version__,
    decay_rate,
    lamb_shift,
    lorentz_gamma,
    permittivity,
    spinor_overlap_factor,
)

__all__ = [
    "ConfigurationError",
    "ConvergenceError",
    "RelemitError",
    "ValidationError",
    "__version__",
    "decay_rate",
    "lamb_shift",
    "lorentz_gamma",
    "permittivity",
    "run_config",
    "spinor_overlap_factor",
]


def run_config(source):
    """Run a YAML scenario (path or text); returns the list of record dicts."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and source.endswith((".yaml", ".yml"))):
        text = Path(source).read_text()
    from ._relemit import run_config_text

    return json.loads(run_config_text(text))["records"]
