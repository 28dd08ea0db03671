"""Closed-form propagator of the static tilted chain and Bloch observables.

For constant hopping ``kappa`` the matrix elements of ``exp(-iHt)`` are

    U_mn(t) = i^(m-n) exp(-i (m+n) omega0 t / 2) J_{m-n}(-(4 kappa/omega0) sin(omega0 t / 2))

which is periodic with the Bloch period ``2 pi / omega0`` for any complex
``kappa``.  Evolving a state is a discrete convolution with the kernel
``i^d J_d(w)`` sandwiched between site-dependent phases.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import LeakError
from .model import EDGE_SITES, LEAK_THRESHOLD, StateVector
from .special_fn import bessel_j, bessel_j_signed, bessel_tail_order

__all__ = [
    "BlochTrajectory",
    "u_mn",
    "propagator_matrix",
    "propagation_kernel",
    "evolve_analytic",
    "bloch_trajectory",
    "I_POWERS",
]

I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])
KERNEL_TOL = 1e-15


def _ipow(k):
    return I_POWERS[np.mod(k, 4)]


def _kernel_argument(t, kappa, omega0):
    return complex(-(4.0 * complex(kappa) / omega0) * np.sin(0.5 * omega0 * t))


def u_mn(m, n, t, kappa, omega0):
    """Single propagator element ``<m| exp(-iHt) |n>``."""
    if not omega0 > 0:
        raise ValueError("omega0 must be > 0")
    d = int(m) - int(n)
    phase = np.exp(-0.5j * (m + n) * omega0 * t)
    return complex(_ipow(d) * phase * bessel_j(d, _kernel_argument(t, kappa, omega0)))


def propagation_kernel(t, kappa, omega0, tol=KERNEL_TOL):
    """Kernel ``i^d J_d(w)`` for ``d = -D..D`` with the tail below ``tol`` dropped.

    Returns ``(kernel, D)``.  ``D`` is at least ``|4 kappa / omega0| + 20`` so the
    truncation is uniform over a Bloch period.
    """
    w = _kernel_argument(t, kappa, omega0)
    reach = int(np.ceil(abs(4.0 * kappa / omega0))) + 20
    reach = max(reach, bessel_tail_order(w, tol))
    d = np.arange(-reach, reach + 1)
    return _ipow(d) * bessel_j_signed(reach, w), reach


def propagator_matrix(sites, t, kappa, omega0):
    """Dense ``U(t)`` restricted to ``sites`` (rows ``m``, columns ``n``)."""
    sites = np.asarray(sites)
    kernel, reach = propagation_kernel(t, kappa, omega0)
    d = sites[:, None] - sites[None, :]
    inside = np.abs(d) <= reach
    u = np.zeros(d.shape, dtype=complex)
    u[inside] = kernel[d[inside] + reach]
    u *= np.exp(-0.5j * (sites[:, None] + sites[None, :]) * omega0 * t)
    return u


def evolve_analytic(initial, t, kappa, omega0, leak_threshold=LEAK_THRESHOLD, check=True):
    """Evolve ``initial`` to time ``t`` with the closed-form propagator.

    Amplitude ``m`` becomes ``sum_l c_l U_ml(t)``.  Amplitude that would land
    outside the window, together with the outermost edge sites, is monitored;
    a :class:`~starkfloq.errors.LeakError` is raised if it exceeds
    ``leak_threshold`` of the total.
    """
    kernel, reach = propagation_kernel(t, kappa, omega0)
    sites = initial.sites
    half = np.exp(-0.5j * omega0 * t * sites)
    full = np.convolve(kernel, half * initial.amplitudes)
    # full[j] corresponds to site sites[0] - reach + j
    inner = full[reach : reach + len(sites)]
    amps = half * inner
    result = StateVector(amps, initial.n_min, initial.time + t)
    if check:
        total = np.sum(np.abs(full) ** 2)
        lost = total - np.sum(np.abs(inner) ** 2)
        edge = result.edge_fraction(EDGE_SITES) * np.sum(np.abs(inner) ** 2)
        frac = float((lost + edge) / total) if total > 0 else 0.0
        if frac > leak_threshold:
            raise LeakError(f"analytic evolution leaks {frac:.2e} of the norm at t={t:g}", fraction=frac)
    return result


@dataclass
class BlochTrajectory:
    """Site probabilities ``P_n(t)``, totals ``P(t)`` and rescaled rows ``P_n/P``."""

    times: np.ndarray
    site_probs: np.ndarray
    totals: np.ndarray
    rescaled: np.ndarray
    n_min: int = 0
    params: dict = field(default_factory=dict)
    final_state: StateVector = None
    max_edge_fraction: float = 0.0

    @classmethod
    def from_probs(cls, times, site_probs, n_min=0, **kw):
        site_probs = np.asarray(site_probs, dtype=float)
        totals = site_probs.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            rescaled = site_probs / totals[:, None]
        return cls(np.asarray(times, dtype=float), site_probs, totals, rescaled, n_min, **kw)

    @property
    def sites(self):
        return np.arange(self.n_min, self.n_min + self.site_probs.shape[1])

    def write_csv(self, path, rescaled=False):
        """Columns ``t, P_total, P_<n_min>, ..., P_<n_max>`` in round-trip precision."""
        rows = self.rescaled if rescaled else self.site_probs
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "P_total"] + [f"P_{n}" for n in self.sites])
            for t, tot, row in zip(self.times, self.totals, rows):
                w.writerow([repr(float(t)), repr(float(tot))] + [repr(float(v)) for v in row])

    def write_sidecar(self, path):
        with open(path, "w") as fh:
            json.dump(self.params, fh, indent=2, sort_keys=True)
            fh.write("\n")


def bloch_trajectory(initial, params, t_grid, leak_threshold=LEAK_THRESHOLD):
    """Sample the analytic evolution of ``initial`` on ``t_grid`` (static hopping only)."""
    if params.omega != 0:
        raise ValueError("the analytic propagator requires static hopping (omega == 0)")
    t_grid = np.asarray(t_grid, dtype=float)
    probs = []
    state = initial
    worst = 0.0
    for t in t_grid:
        state = evolve_analytic(initial, t, params.kappa0, params.omega0, leak_threshold)
        worst = max(worst, state.edge_fraction())
        probs.append(state.probabilities)
    return BlochTrajectory.from_probs(
        t_grid,
        np.array(probs),
        initial.n_min,
        final_state=state,
        max_edge_fraction=worst,
    )
