"""Rotating stars with variable entropy.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports it and adds :func:`load_field` for reading solution grids.
"""

from pathlib import Path

import numpy as np

from ._core import (
    DivergenceError,
    DomainError,
    FormatError,
    GridSpec,
    InvariantViolation,
    LaneEmden,
    NonConvergenceError,
    ProfileSpec,
    RunConfig,
    Star,
    __version__,
    mass_derivative_identity,
    parse_config,
    run_cli,
    serialize_config,
    set_warnings_enabled,
    solve_lane_emden,
    validate_config,
)


def load_field(path):
    """Read a "u_index,theta_index,value" CSV into an (Nu, Ntheta) array."""
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1)
    i = data[:, 0].astype(int)
    j = data[:, 1].astype(int)
    out = np.empty((i.max() + 1, j.max() + 1))
    out[i, j] = data[:, 2]
    return out


__all__ = [
    "DivergenceError",
    "DomainError",
    "FormatError",
    "GridSpec",
    "InvariantViolation",
    "LaneEmden",
    "NonConvergenceError",
    "ProfileSpec",
    "RunConfig",
    "Star",
    "__version__",
    "load_field",
    "mass_derivative_identity",
    "parse_config",
    "run_cli",
    "serialize_config",
    "set_warnings_enabled",
    "solve_lane_emden",
    "validate_config",
]
