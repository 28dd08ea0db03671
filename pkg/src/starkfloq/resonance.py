"""Level-space dynamics at Floquet resonance ``omega == omega0``.

Writing the state as ``sum_m a_m(t) exp(-i m omega0 t) |psi_m(t)>`` and dropping
counter-rotating terms leaves the uniform chain

    i da_n/dt = (kappa0 / 2) (a_{n-1} + a_{n+1}),

with band ``kappa0 cos k``.  Its propagator is the Bessel kernel
``i^d J_d(-kappa0 t)``; :func:`heq_evolve` applies it for any complex
``kappa0``.  The level probabilities sum to ``I_0(2 |Im kappa0| t)`` for a
single occupied initial level.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FitError, LeakError, WindowError
from .integrator import IntegratorConfig, check_window_margin, evolve
from .model import ChainParams, StateVector, kappa_at
from .propagator import I_POWERS
from .special_fn import bessel_j_signed, bessel_tail_order, modified_bessel_i0

__all__ = [
    "LevelTrajectory",
    "heq_kernel",
    "heq_evolve",
    "heq_trajectory",
    "level_window",
    "total_level_probability",
    "gaussian_profile_check",
    "GaussianFit",
    "project_full_to_levels",
    "reconstruct_from_levels",
    "rwa_consistency",
    "l1_distance",
]

TAIL_TOL = 1e-15


def heq_kernel(kappa0, t, tol=TAIL_TOL):
    """``(kernel, reach)`` with ``kernel[d + reach] = i^d J_d(-kappa0 t)``."""
    arg = -complex(kappa0) * t
    reach = bessel_tail_order(arg, tol)
    d = np.arange(-reach, reach + 1)
    return I_POWERS[np.mod(d, 4)] * bessel_j_signed(reach, arg), reach


def level_window(kappa0, t_max, margin=40):
    """Half-width ``L`` of a level window ``-L..L`` large enough up to ``t_max``."""
    return bessel_tail_order(-complex(kappa0) * t_max, TAIL_TOL) + margin


def heq_evolve(initial_a, kappa0, t, leak_threshold=1e-8):
    """Evolve level amplitudes under the equivalent uniform chain.

    ``a_n(t) = sum_l a_l(0) i^(n-l) J_{n-l}(-kappa0 t)`` on the same index
    window as ``initial_a``.  Raises :class:`~starkfloq.errors.LeakError` if
    more than ``leak_threshold`` of the evolved weight falls outside.
    """
    a0 = np.asarray(initial_a, dtype=complex)
    if t == 0:
        return a0.copy()
    kernel, reach = heq_kernel(kappa0, t)
    full = np.convolve(kernel, a0)
    inner = full[reach : reach + len(a0)]
    total = np.sum(np.abs(full) ** 2)
    if total > 0:
        lost = (total - np.sum(np.abs(inner) ** 2)) / total
        if lost > leak_threshold:
            raise LeakError(f"level window too small: {lost:.2e} of the weight left it at t={t:g}", fraction=lost)
    return inner


def total_level_probability(kappa0, t):
    """``sum_n |a_n(t)|^2`` for one initially occupied level: ``I_0(2 |Im kappa0| t)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    g = abs(complex(kappa0).imag)
    if g == 0:
        return 1.0
    return modified_bessel_i0(2.0 * g * t)


@dataclass
class LevelTrajectory:
    """Level occupations ``P_n(t) = |a_n(t)|^2`` over time and their totals."""

    times: np.ndarray
    level_probs: np.ndarray
    totals: np.ndarray
    levels: np.ndarray
    source: str = "analytic_heq"
    params: dict = field(default_factory=dict)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "P_total"] + [f"P_level_{n}" for n in self.levels])
            for t, tot, row in zip(self.times, self.totals, self.level_probs):
                w.writerow([repr(float(t)), repr(float(tot))] + [repr(float(v)) for v in row])

    def write_sidecar(self, path):
        with open(path, "w") as fh:
            json.dump(self.params, fh, indent=2, sort_keys=True)
            fh.write("\n")


def heq_trajectory(kappa0, times, half_width=None):
    """Level trajectory from a single occupied level 0, evaluated in closed form."""
    times = np.asarray(times, dtype=float)
    L = level_window(kappa0, times.max()) if half_width is None else int(half_width)
    levels = np.arange(-L, L + 1)
    a0 = np.zeros(levels.size, dtype=complex)
    a0[L] = 1.0
    rows = np.array([np.abs(heq_evolve(a0, kappa0, t)) ** 2 for t in times])
    return LevelTrajectory(
        times,
        rows,
        rows.sum(axis=1),
        levels,
        params={"kappa0": {"re": complex(kappa0).real, "im": complex(kappa0).imag}, "half_width": L},
    )


@dataclass
class GaussianFit:
    center: float
    inverse_width: float
    width2: float
    r2: float
    samples: int
    predicted_inverse_width: float

    @property
    def relative_error(self):
        return abs(self.inverse_width / self.predicted_inverse_width - 1.0)


def gaussian_profile_check(level_probs, kappa0, t, levels=None, support="halfmax"):
    """Fit ``log P_n = c - beta (n - n0)^2`` and compare ``beta`` with ``|Im k0| / (|k0|^2 t)``.

    ``support="halfmax"`` fits the levels with ``P_n >= max P / 2``;
    ``support="threshold"`` uses every level above ``1e-6`` of the total.
    The centre ``n0`` is the probability-weighted mean over the support.
    """
    k0 = complex(kappa0)
    if k0.imag == 0:
        raise ValueError("Gaussian profile check requires Im(kappa0) != 0")
    p = np.asarray(level_probs, dtype=float)
    n = np.arange(p.size) - p.size // 2 if levels is None else np.asarray(levels, dtype=float)
    total = p.sum()
    if support == "halfmax":
        mask = p >= 0.5 * p.max()
    elif support == "threshold":
        mask = p > 1e-6 * total
    else:
        raise ValueError(f"unknown support {support!r}")
    if mask.sum() < 3:
        raise FitError("profile support too narrow for a Gaussian fit")
    x, y = n[mask], np.log(p[mask])
    center = float(np.sum(x * p[mask]) / np.sum(p[mask]))
    u = (x - center) ** 2
    slope, intercept = np.polyfit(u, y, 1)
    resid = y - (slope * u + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    beta = -float(slope)
    if not beta > 0:
        raise FitError("profile is not peaked")
    return GaussianFit(
        center=center,
        inverse_width=beta,
        width2=1.0 / beta,
        r2=float(r2),
        samples=int(mask.sum()),
        predicted_inverse_width=abs(k0.imag) / (abs(k0) ** 2 * t),
    )


def _level_kernel(params, t):
    w = complex(-2.0 * kappa_at(params, t) / params.omega0)
    reach = bessel_tail_order(w, TAIL_TOL, minimum=10)
    return bessel_j_signed(reach, w), reach


def project_full_to_levels(full_state, params, t=None):
    """Level amplitudes ``a_m = <phi_m(t)|Psi> exp(+i m omega0 t)`` for every site ``m`` of the window.

    Uses ``conj(phi_m(n)) = J_{n-m}(-2 kappa(t)/omega0)``.  Where ``kappa(t)``
    vanishes the kernel collapses to a delta and the levels are the sites.
    Levels whose eigenvectors reach past the window edge are computed with the
    truncated overlap; keep the state away from the edges.
    """
    t = full_state.time if t is None else float(t)
    psi = full_state.amplitudes
    sites = full_state.sites
    if kappa_at(params, t) == 0:
        overlap = psi.copy()
    else:
        kernel, reach = _level_kernel(params, t)
        # a_m = sum_n J_{n-m}(w) psi_n : correlation with the kernel
        full = np.convolve(kernel[::-1], psi)
        overlap = full[reach : reach + psi.size]
    return overlap * np.exp(1j * sites * params.omega0 * t)


def reconstruct_from_levels(a, params, t, n_min):
    """Site amplitudes ``sum_m a_m exp(-i m omega0 t) psi_m(n)``."""
    a = np.asarray(a, dtype=complex)
    sites = n_min + np.arange(a.size)
    coeff = a * np.exp(-1j * sites * params.omega0 * t)
    if kappa_at(params, t) == 0:
        return StateVector(coeff, n_min, t)
    kernel, reach = _level_kernel(params, t)
    full = np.convolve(kernel, coeff)
    return StateVector(full[reach : reach + a.size], n_min, t)


def l1_distance(p, q):
    """L1 distance between two distributions after normalising each to unit sum."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.abs(p / p.sum() - q / q.sum()).sum())


def rwa_consistency(initial, params, t_checkpoints, config=None, core=None):
    """Compare full time-ordered evolution with the equivalent chain at resonance.

    Pipeline (a) integrates ``H(t)`` and projects onto the instantaneous
    levels; pipeline (b) projects the initial state at ``t=0`` and evolves the
    level amplitudes with :func:`heq_evolve` using ``kappa0`` (the kernel that
    solves the resonant amplitude equation).  Distances are measured on
    normalised distributions restricted to levels at least 20 sites from the
    window edges (``core`` half-width overrides).

    Returns a list of ``{"t", "l1", "P_full", "P_heq"}`` dicts.
    """
    if params.omega != params.omega0:
        raise ValueError("rwa_consistency requires omega == omega0")
    if abs(params.kappa0) > 0.25 * params.omega0 * (1 + 1e-12):
        raise ValueError("RWA regime requires |kappa0| <= omega0 / 4")
    config = config or IntegratorConfig()
    t_checkpoints = sorted(float(t) for t in t_checkpoints)
    sites = initial.sites
    if core is None:
        keep = (sites >= sites[0] + 20) & (sites <= sites[-1] - 20)
    else:
        keep = np.abs(sites) <= core
    if keep.sum() < 3:
        raise WindowError("window too small for the level comparison")

    a0 = project_full_to_levels(initial, params, initial.time)
    if config.check_margin and t_checkpoints:
        check_window_margin(initial, params, t_checkpoints[-1] - initial.time)
    # later segments start from a fully supported state; the margin was checked for the whole horizon
    segment = replace(config, check_margin=False)
    report = []
    state = initial
    t_now = initial.time
    for tc in t_checkpoints:
        if tc > t_now:
            traj = evolve(state, params, tc - t_now, segment)
            state = traj.final_state
            t_now = state.time
        full_levels = np.abs(project_full_to_levels(state, params, t_now)) ** 2
        heq_levels = np.abs(heq_evolve(a0, params.kappa0, tc - initial.time)) ** 2
        report.append(
            {
                "t": tc,
                "l1": l1_distance(full_levels[keep], heq_levels[keep]),
                "P_full": float(full_levels.sum()),
                "P_heq": float(heq_levels.sum()),
            }
        )
    return report
