"""Time-ordered evolution of the driven chain.

Each step applies ``exp(-i H(t + dt/2) dt)``, the exponential of the
Hamiltonian at the interval midpoint.  The action on the state is a
truncated Taylor series built from tridiagonal matrix-vector products.  The
scheme is second order for time-dependent ``H`` and exact, up to the series
tolerance, when ``H`` is constant.  The state is never renormalised.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, WindowError
from .model import LEAK_THRESHOLD, StateVector, kappa_at, tridiagonal_matvec
from .propagator import BlochTrajectory

__all__ = [
    "IntegratorConfig",
    "default_dt",
    "step",
    "evolve",
    "required_margin",
    "check_window_margin",
    "convergence_study",
    "MAX_TERMS",
]

MAX_TERMS = 200


def default_dt(omega0):
    return 2.0 * math.pi / (1000.0 * omega0)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size and tolerances for :func:`evolve`.

    ``dt=None`` selects ``2 pi / (1000 omega0)``.  ``sample_every`` thins the
    stored trajectory (every k-th step plus the final time).
    """

    dt: float = None
    order: str = "midpoint-exponential"
    taylor_tol: float = 1e-14
    leak_threshold: float = LEAK_THRESHOLD
    sample_every: int = 1
    check_margin: bool = True

    def __post_init__(self):
        if self.order != "midpoint-exponential":
            raise ValueError(f"unknown stepping scheme {self.order!r}")
        if self.taylor_tol > 1e-12:
            raise ValueError("taylor_tol must be <= 1e-12")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    def resolve_dt(self, params):
        dt = default_dt(params.omega0) if self.dt is None else float(self.dt)
        if not dt > 0:
            raise ValueError("dt must be > 0")
        limit = 2.0 * math.pi / params.omega0
        if params.omega > 0:
            limit = min(limit, 2.0 * math.pi / params.omega)
        if dt > 0.05 * limit * (1 + 1e-12):
            raise ValueError(f"dt={dt:g} exceeds 0.05 of the shortest period ({limit:g})")
        return dt


def _expm_action(diag, off, x, dt, tol):
    """``exp(-i dt H) x`` by Taylor series; terms stop once below ``tol * |x|``."""
    scale = np.linalg.norm(x)
    if scale == 0:
        return x.copy()
    out = x.copy()
    term = x
    for k in range(1, MAX_TERMS + 1):
        term = tridiagonal_matvec(diag, off, term) * (-1j * dt / k)
        out += term
        if np.linalg.norm(term) < tol * scale:
            return out
    raise ConvergenceError(
        f"Taylor series did not converge in {MAX_TERMS} terms; reduce dt", iterations=MAX_TERMS
    )


def _diag(params):
    return params.omega0 * params.sites.astype(float)


def step(state, t, dt, params, taylor_tol=1e-14):
    """Advance ``state`` from ``t`` to ``t + dt`` with the midpoint exponential."""
    diag = _diag(params)
    off = np.full(params.size - 1, kappa_at(params, t + 0.5 * dt), dtype=complex)
    amps = _expm_action(diag, off, state.amplitudes, dt, taylor_tol)
    return StateVector(amps, state.n_min, t + dt)


def required_margin(params, t_final):
    """Sites needed on each side of the initial support: ``4|kappa0| t / omega0 + 40``."""
    return int(math.ceil(4.0 * abs(params.kappa0) * t_final / params.omega0)) + 40


def check_window_margin(initial, params, t_final):
    """Raise :class:`WindowError` if the support of ``initial`` is closer than
    :func:`required_margin` to either window edge."""
    support = np.nonzero(initial.amplitudes)[0]
    if support.size == 0:
        raise ValueError("initial state is zero")
    lo = initial.n_min + support[0] - params.window[0]
    hi = params.window[1] - (initial.n_min + support[-1])
    need = required_margin(params, t_final)
    if min(lo, hi) < need:
        raise WindowError(
            f"window {params.window} leaves {min(lo, hi)} sites of margin; {need} required for t={t_final:g}"
        )


def evolve(initial, params, t_final, config=None):
    """Integrate from ``initial.time`` over ``t_final`` and record the trajectory.

    The initial state must live on ``params.window``.  Returns a
    :class:`~starkfloq.propagator.BlochTrajectory` whose ``final_state`` is
    the state at the end; the edge monitor is checked on every stored sample.
    """
    config = config or IntegratorConfig()
    if initial.window != params.window:
        raise WindowError(f"state window {initial.window} differs from params window {params.window}")
    if config.check_margin:
        check_window_margin(initial, params, t_final)
    dt = config.resolve_dt(params)
    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps
    t0 = initial.time

    diag = _diag(params)
    off = np.empty(params.size - 1, dtype=complex)
    x = initial.amplitudes.copy()
    times = [t0]
    probs = [np.abs(x) ** 2]
    worst = initial.edge_fraction()
    for k in range(n_steps):
        t = t0 + k * dt
        off.fill(kappa_at(params, t + 0.5 * dt))
        x = _expm_action(diag, off, x, dt, config.taylor_tol)
        if (k + 1) % config.sample_every == 0 or k + 1 == n_steps:
            snap = StateVector(x, initial.n_min, t + dt)
            worst = max(worst, snap.check_leak(config.leak_threshold))
            times.append(t0 + (k + 1) * dt)
            probs.append(snap.probabilities)
    final = StateVector(x, initial.n_min, t0 + n_steps * dt)
    return BlochTrajectory.from_probs(
        np.array(times), np.array(probs), initial.n_min, final_state=final, max_edge_fraction=worst
    )


def convergence_study(initial, params, t_final, dt_list, reference=None, config=None):
    """Errors of the final state for each ``dt`` in ``dt_list`` (descending).

    With ``reference=None`` each run is compared with a run at ``dt / 2``
    (self-convergence).  Otherwise ``reference`` is a ``StateVector`` to compare
    against, such as the analytic propagator result.  Returns a list of dicts
    with keys ``dt``, ``error`` and ``order`` (observed order against the
    previous row, ``nan`` on the first).
    """
    config = config or IntegratorConfig()
    dt_list = [float(d) for d in dt_list]
    if any(b >= a for a, b in zip(dt_list, dt_list[1:])):
        raise ValueError("dt_list must be strictly descending")

    def run(dt):
        cfg = IntegratorConfig(
            dt=dt,
            taylor_tol=config.taylor_tol,
            leak_threshold=config.leak_threshold,
            sample_every=10**9,
            check_margin=config.check_margin,
        )
        return evolve(initial, params, t_final, cfg).final_state.amplitudes

    rows = []
    for dt in dt_list:
        coarse = run(dt)
        ref = run(dt / 2) if reference is None else reference.amplitudes
        err = float(np.abs(coarse - ref).max())
        order = float("nan")
        if rows and rows[-1]["error"] > 0 and err > 0:
            order = math.log(rows[-1]["error"] / err) / math.log(rows[-1]["dt"] / dt)
        rows.append({"dt": dt, "error": err, "order": order})
    return rows
