"""Lattice parameters, state vectors and the tilted-chain Hamiltonian.

The chain Hamiltonian is

    H(t) = kappa(t) * sum_n (|n><n+1| + |n+1><n|) + omega0 * sum_n n |n><n|

with ``kappa(t) = kappa0 * cos(omega * t)``.  For complex ``kappa0`` the
matrix is complex symmetric (equal to its transpose) but not Hermitian.
Sites are labelled by their absolute index ``n``; a finite window
``(n_min, n_max)`` with hard walls stands in for the infinite chain.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LeakError, WindowError

__all__ = [
    "ChainParams",
    "StateVector",
    "EigenPair",
    "kappa_at",
    "build_hamiltonian",
    "tridiagonal",
    "tridiagonal_matvec",
    "site_state",
    "centered_window",
    "EDGE_SITES",
    "LEAK_THRESHOLD",
]

EDGE_SITES = 5
LEAK_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ChainParams:
    """Parameters of the driven tilted chain.

    Attributes
    ----------
    kappa0 : complex
        Hopping amplitude.
    omega : float
        Drive frequency; ``0`` means static hopping ``kappa0``.
    omega0 : float
        Tilt slope (ladder spacing), ``> 0``.
    window : tuple of int
        Retained sites ``(n_min, n_max)``, inclusive.
    """

    kappa0: complex = 1.0
    omega: float = 0.0
    omega0: float = 1.0
    window: tuple = (-50, 50)

    def __post_init__(self):
        object.__setattr__(self, "kappa0", complex(self.kappa0))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "omega0", float(self.omega0))
        n_min, n_max = (int(v) for v in self.window)
        object.__setattr__(self, "window", (n_min, n_max))
        if not self.omega0 > 0:
            raise ValueError("omega0 must be > 0")
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        if n_max - n_min + 1 < 3:
            raise WindowError(f"window {self.window} must hold at least 3 sites")

    @property
    def sites(self):
        return np.arange(self.window[0], self.window[1] + 1)

    @property
    def size(self):
        return self.window[1] - self.window[0] + 1

    def with_window(self, window):
        return replace(self, window=tuple(window))


def centered_window(half_width):
    """Window ``(-half_width, half_width)``."""
    h = int(half_width)
    return (-h, h)


@dataclass
class StateVector:
    """Complex amplitudes on the sites ``n_min, n_min + 1, ...``.

    Never normalised implicitly: under non-Hermitian evolution the norm is an
    observable.
    """

    amplitudes: np.ndarray
    n_min: int = 0
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        self.n_min = int(self.n_min)
        self.time = float(self.time)

    @property
    def n_max(self):
        return self.n_min + len(self.amplitudes) - 1

    @property
    def window(self):
        return (self.n_min, self.n_max)

    @property
    def sites(self):
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def norm2(self):
        return float(np.sum(self.probabilities))

    def amplitude(self, n):
        i = n - self.n_min
        if 0 <= i < len(self.amplitudes):
            return self.amplitudes[i]
        return 0j

    def edge_fraction(self, edge=EDGE_SITES):
        """Fraction of ``norm2`` on the outermost ``edge`` sites at each end."""
        p = self.probabilities
        total = p.sum()
        if total == 0:
            return 0.0
        return float((p[:edge].sum() + p[-edge:].sum()) / total)

    def check_leak(self, threshold=LEAK_THRESHOLD, edge=EDGE_SITES):
        frac = self.edge_fraction(edge)
        if frac > threshold:
            raise LeakError(
                f"edge fraction {frac:.3e} exceeds {threshold:.1e} at t={self.time:g}; widen the window",
                fraction=frac,
            )
        return frac

    def copy(self):
        return StateVector(self.amplitudes.copy(), self.n_min, self.time)


@dataclass
class EigenPair:
    """One rung of the Wannier-Stark ladder; ``energy`` is ``m * omega0`` by construction."""

    m: int
    energy: complex
    right: StateVector
    left: StateVector = field(repr=False, default=None)


def site_state(n, window, time=0.0):
    """Unit amplitude on site ``n``."""
    n_min, n_max = window
    if not n_min <= n <= n_max:
        raise WindowError(f"site {n} outside window {window}")
    amps = np.zeros(n_max - n_min + 1, dtype=complex)
    amps[n - n_min] = 1.0
    return StateVector(amps, n_min, time)


def kappa_at(params, t):
    """Instantaneous hopping ``kappa0 * cos(omega * t)``."""
    if params.omega == 0.0:
        return params.kappa0
    return params.kappa0 * np.cos(params.omega * t)


def tridiagonal(params, t):
    """Diagonal and off-diagonal of ``H(t)`` on the window."""
    diag = params.omega0 * params.sites.astype(float)
    off = np.full(params.size - 1, kappa_at(params, t), dtype=complex)
    return diag, off


def tridiagonal_matvec(diag, off, x):
    """``H @ x`` for the complex-symmetric tridiagonal ``H``."""
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def build_hamiltonian(params, t=0.0):
    """Dense ``H(t)`` on the window, open boundaries."""
    diag, off = tridiagonal(params, t)
    h = np.diag(diag.astype(complex))
    h += np.diag(off, 1) + np.diag(off, -1)
    return h
