"""Spectral variable selection with B-spline compression and mutual information."""

import json
import os

from ._core import *  # noqa: F401,F403
from ._core import _run_pipeline_arrays, _run_pipeline_config

__version__ = "0.1.0"


def run_pipeline(config=None, *, wavelengths=None, spectra=None, target=None, **options):
    """Run the full pipeline and return the report as a dict.

    Pass either a config file path, or arrays plus config keys as keyword
    arguments (lists may be given as Python lists).
    """
    if config is not None:
        return json.loads(_run_pipeline_config(os.fspath(config)))
    if wavelengths is None or spectra is None or target is None:
        raise TypeError("need a config path or wavelengths, spectra and target")
    lines = []
    for key, value in options.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return json.loads(_run_pipeline_arrays("\n".join(lines) + "\n", wavelengths, spectra, target))
