"""Simulation and verification of eigenvalue dynamics of the elliptic Ginibre process.

Modules
-------
linalg          determinant primitives and identities
process         exact sampling of the matrix Brownian motion
spectral        eigendecomposition, overlaps, eigenvalue tracking
sde_verify      Monte-Carlo and finite-difference checks of the eigenvalue SDE
two_by_two      closed-form 2 x 2 overlap dynamics
spectral_stats  static-ensemble spectral laws
cli             command-line interface
"""

__version__ = "0.1.0"

from .errors import ArgumentError, DegeneracyError  # noqa: E402
from .process import Initial, MatrixState, SimConfig  # noqa: E402
from .reports import VerificationReport  # noqa: E402
from .spectral import SpectralFrame, Trajectory, decompose, simulate_trajectory  # noqa: E402

__all__ = [
    "ArgumentError",
    "DegeneracyError",
    "Initial",
    "MatrixState",
    "SimConfig",
    "SpectralFrame",
    "Trajectory",
    "VerificationReport",
    "decompose",
    "simulate_trajectory",
    "__version__",
]
