"""Instantaneous eigensystem of the tilted chain.

The right eigenvectors are Bessel profiles ``psi_m(n) = J_{n-m}(-2 kappa / omega0)``
with energy ``m * omega0`` whatever the phase of ``kappa``; the left
eigenvectors use ``conj(kappa)``.  Because ``conj(J_k(conj(w))) = J_k(w)`` the
biorthogonal overlap reduces to the bilinear Bessel sum
``sum_k J_{k}(w) J_{k+m-n}(w) = delta_mn``.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, WindowError
from .model import ChainParams, EigenPair, StateVector, build_hamiltonian, kappa_at
from .special_fn import bessel_j_row

__all__ = [
    "SpectrumReport",
    "eigen_argument",
    "right_eigenvector",
    "left_eigenvector",
    "eigenpair",
    "ipr",
    "finite_chain_spectrum",
    "biorthonormality_matrix",
    "ladder_size",
    "unpaired_eigenvalues",
    "SUPPORT_TOL",
    "MIN_MARGIN",
]

SUPPORT_TOL = 1e-14
MIN_MARGIN = 10
IMAG_TOL = 1e-6
SPACING_TOL = 1e-6


def eigen_argument(params, t=0.0, conjugate=False):
    """Bessel argument ``-2 kappa(t) / omega0`` (``kappa*`` for left vectors)."""
    kappa = kappa_at(params, t)
    if conjugate:
        kappa = np.conj(kappa)
    return complex(-2.0 * kappa / params.omega0)


def _profile(m, params, arg):
    n_min, n_max = params.window
    # one recurrence depth for every rung keeps translation exact
    reach = params.size + 1
    if m - n_min < MIN_MARGIN or n_max - m < MIN_MARGIN:
        raise WindowError(f"rung {m} is closer than {MIN_MARGIN} sites to the window {params.window}")
    row = bessel_j_row(reach, arg)
    # first orders that fall outside the window on each side
    out_lo, out_hi = m - n_min + 1, n_max - m + 1
    peak = np.abs(row).max()
    tail = max(abs(row[out_lo]), abs(row[out_hi]))
    if tail >= SUPPORT_TOL * max(peak, 1.0) or abs(arg) >= min(out_lo, out_hi):
        raise WindowError(
            f"rung {m} eigenvector is clipped by window {params.window} (edge amplitude {tail:.2e})"
        )
    d = params.sites - m
    vals = row[np.abs(d)]
    odd_neg = (d < 0) & (d % 2 == 1)
    vals[odd_neg] *= -1.0
    return StateVector(vals, params.window[0])


def right_eigenvector(m, params, t=0.0):
    """Right eigenvector of rung ``m``: amplitude ``J_{n-m}(-2 kappa(t)/omega0)`` at site ``n``."""
    state = _profile(int(m), params, eigen_argument(params, t))
    state.time = t
    return state


def left_eigenvector(m, params, t=0.0):
    """Left eigenvector of rung ``m``: ``J_{n-m}(-2 kappa(t)*/omega0)``."""
    state = _profile(int(m), params, eigen_argument(params, t, conjugate=True))
    state.time = t
    return state


def eigenpair(m, params, t=0.0):
    return EigenPair(
        m=int(m),
        energy=complex(m * params.omega0),
        right=right_eigenvector(m, params, t),
        left=left_eigenvector(m, params, t),
    )


def ipr(state):
    """Inverse participation ratio ``sum |psi|^4 / (sum |psi|^2)^2``."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    p = np.abs(amps) ** 2
    total = p.sum()
    if total == 0:
        raise ValueError("IPR of the zero state is undefined")
    return float(np.sum(p * p) / total**2)


def biorthonormality_matrix(params, t=0.0, rung_range=(-20, 20)):
    """Largest ``|<phi_m|psi_n> - delta_mn|`` over rungs ``m, n`` in ``rung_range``."""
    lo, hi = rung_range
    rungs = range(int(lo), int(hi) + 1)
    right = np.array([right_eigenvector(m, params, t).amplitudes for m in rungs])
    left = np.array([left_eigenvector(m, params, t).amplitudes for m in rungs])
    overlap = left.conj() @ right.T
    return float(np.abs(overlap - np.eye(len(rungs))).max())


@dataclass
class SpectrumReport:
    """Finite-chain eigenvalues and how well the central part forms the ladder.

    ``max_imag`` and ``max_spacing_dev`` are computed over the central
    ``ladder_window`` levels only; ``ladder_size`` is the longest central run
    that passes both tolerances.
    """

    eigenvalues: list
    ladder_window: int
    max_imag: float
    max_spacing_dev: float
    ladder_size: int = 0
    N: int = 0

    def to_json(self):
        d = asdict(self)
        d["eigenvalues"] = [{"re": float(e.real), "im": float(e.imag)} for e in self.eigenvalues]
        return d

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


def _central(vals, count):
    n = len(vals)
    count = min(count, n if n % 2 else n - 1)
    start = (n - count) // 2
    return vals[start : start + count]


def _ladder_stats(vals, omega0):
    imag = float(np.abs(vals.imag).max()) if len(vals) else 0.0
    spacing = float(np.abs(np.diff(vals.real) - omega0).max()) if len(vals) > 1 else 0.0
    return imag, spacing


def ladder_size(vals, omega0, imag_tol=IMAG_TOL, spacing_tol=SPACING_TOL):
    """Largest odd central count of sorted eigenvalues forming a real, equally spaced ladder."""
    best = 0
    for count in range(1, len(vals) + 1, 2):
        sub = _central(vals, count)
        if len(sub) < count:
            break
        imag, spacing = _ladder_stats(sub, omega0)
        if imag < imag_tol and spacing < spacing_tol:
            best = count
        else:
            break
    return best


def finite_chain_spectrum(N, params, t=0.0, ladder_window=None):
    """Eigenvalues of the open ``N``-site chain centred on site 0.

    The dense matrix from :func:`~starkfloq.model.build_hamiltonian` is handed
    to LAPACK's general complex eigensolver (Hessenberg reduction followed by
    shifted QR).  Eigenvalues are sorted by real part, ties by imaginary part.
    """
    N = int(N)
    if not 3 <= N <= 2000:
        raise ValueError("N must lie in [3, 2000]")
    n_min = -(N // 2)
    chain = ChainParams(params.kappa0, params.omega, params.omega0, (n_min, n_min + N - 1))
    h = build_hamiltonian(chain, t)
    try:
        vals = scipy.linalg.eigvals(h, overwrite_a=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration failed for N={N}: {exc}") from exc
    vals = vals[np.lexsort((vals.imag, vals.real))]
    if ladder_window is None:
        ladder_window = int(round(N / 5))
        if ladder_window % 2 == 0:
            ladder_window += 1
    ladder_window = max(1, min(int(ladder_window), N))
    imag, spacing = _ladder_stats(_central(vals, ladder_window), params.omega0)
    return SpectrumReport(
        eigenvalues=list(vals),
        ladder_window=ladder_window,
        max_imag=imag,
        max_spacing_dev=spacing,
        ladder_size=ladder_size(vals, params.omega0),
        N=N,
    )


def unpaired_eigenvalues(eigenvalues, tol=1e-8):
    """Eigenvalues whose complex conjugate is absent from the spectrum."""
    vals = np.asarray(eigenvalues)
    return [e for e in vals if np.abs(vals - np.conj(e)).min() > tol]
