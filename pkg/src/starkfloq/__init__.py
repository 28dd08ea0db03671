"""Wannier-Stark ladders, Bloch oscillations and Floquet resonance on tilted chains with complex hopping.

Submodules
----------
special_fn
    Bessel functions of integer order and complex argument.
model
    Chain parameters, state vectors and the tilted-chain Hamiltonian.
spectrum
    Analytic ladder eigenpairs and finite-chain diagonalisation.
propagator
    Closed-form propagator of the static chain.
integrator
    Time-ordered evolution under periodic driving.
resonance
    Level-space dynamics at ``omega == omega0``.
exponent
    Spreading fronts and dynamical exponents.
lattice2d
    Static 2D lattice whose packet dynamics replays the driven chain.
cli
    ``starkfloq`` command-line front end.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FitError,
    LeakError,
    RangeError,
    StarkFloqError,
    WindowError,
)
from .model import ChainParams, EigenPair, StateVector, build_hamiltonian, site_state
from .special_fn import bessel_j, bessel_j_row, modified_bessel_i0

__all__ = [
    "__version__",
    "ChainParams",
    "EigenPair",
    "StateVector",
    "build_hamiltonian",
    "site_state",
    "bessel_j",
    "bessel_j_row",
    "modified_bessel_i0",
    "StarkFloqError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "FitError",
    "LeakError",
    "RangeError",
    "WindowError",
]
