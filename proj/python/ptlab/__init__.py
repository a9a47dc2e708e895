# SPDX-License-Identifier: Apache-2.0
"""Python access to the porous thermoelastic rod solver.

The heavy lifting lives in the compiled ``_ptl`` extension; this package re-exports it and adds
a small helper for loading config files.
"""

from pathlib import Path

from ._ptl import (
    Model,
    NumericalError,
    ValidationError,
    certify_kernel,
    config_schema,
    decay_fit,
    param_violations,
    run,
)

__all__ = [
    "Model",
    "NumericalError",
    "ValidationError",
    "certify_kernel",
    "config_schema",
    "decay_fit",
    "load_model",
    "param_violations",
    "run",
]


def load_model(path):
    """Assemble the model described by a JSON config file."""
    return Model.from_json(Path(path).read_text())
