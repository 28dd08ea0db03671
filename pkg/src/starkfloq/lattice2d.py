"""Static square lattice whose wavepacket dynamics replays the driven chain.

Rows carry the tilted chain with column-dependent hopping ``kappa0 cos(q m)``;
columns are coupled by ``-J``.  A Gaussian packet with momentum ``pi/2`` along
``m`` travels at roughly ``2J``, so column ``m`` plays the role of time
``m / 2J`` and ``q = omega / 2J`` reproduces the drive ``kappa0 cos(omega t)``.

States are arrays of shape ``(N_x, N_y)``: row index ``i`` is site
``n = n_min + i``, column index ``j`` is ``m = m_min + j``.
"""

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy import stats

from .errors import ConvergenceError, FitError, WindowError

__all__ = [
    "Lattice2DParams",
    "Snapshot2D",
    "Trace2D",
    "ScenarioResult",
    "SCENARIOS",
    "build_h2d",
    "packet_offset",
    "initial_wavepacket",
    "arnoldi_expm",
    "evolve2d",
    "dense_evolve2d",
    "run_scenario",
    "run_lattice",
    "scenario_params",
    "column_marginal",
    "column_widths",
    "centroid_m",
    "width_exponent",
    "breathing_period",
    "packet_velocity",
]

PACKET_TAIL = 1e-8
N_MARGIN = 10
DEFAULT_SIZE = (30, 60)
DEFAULT_TAU = 0.1
FAR_EDGE_STOP = 1e-4


def packet_offset(tail=PACKET_TAIL):
    """Columns kept below the packet centre so that ``exp(-m^2/4) < tail`` just outside."""
    return int(math.ceil(2.0 * math.sqrt(-math.log(tail)))) - 1


@dataclass(frozen=True)
class Lattice2DParams:
    """Square-lattice parameters.

    ``size`` is ``(N_x, N_y)``: ``N_x`` sites along ``n`` (the simulated
    chain) and ``N_y`` columns along ``m`` (the time proxy).  ``n_min`` and
    ``m_min`` default to a centred chain and a packet launched at ``m = 0``
    with :func:`packet_offset` columns behind it.
    """

    kappa0: complex = 1.0
    q: float = 0.0
    J: float = 1.0
    omega0: float = 0.5
    size: tuple = DEFAULT_SIZE
    n_min: int = None
    m_min: int = None

    def __post_init__(self):
        object.__setattr__(self, "kappa0", complex(self.kappa0))
        object.__setattr__(self, "size", tuple(int(s) for s in self.size))
        if self.n_min is None:
            object.__setattr__(self, "n_min", -(self.size[0] // 2))
        if self.m_min is None:
            object.__setattr__(self, "m_min", -packet_offset())
        if not self.J > 0:
            raise ValueError("J must be > 0")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be > 0")
        if self.size[0] < 3 or self.size[1] < 3:
            raise WindowError("lattice must be at least 3 x 3")
        if abs(self.kappa0) > 0.5 * self.J:
            warnings.warn(
                f"|kappa0| = {abs(self.kappa0):g} exceeds J/2; the 2D mapping assumes |kappa0| << J",
                stacklevel=3,
            )

    @classmethod
    def for_drive(cls, kappa0, omega, J=1.0, omega0=0.5, **kw):
        """Parameters simulating drive frequency ``omega`` via ``q = omega / 2J``."""
        return cls(kappa0=kappa0, q=omega / (2.0 * J), J=J, omega0=omega0, **kw)

    @property
    def n_sites(self):
        return self.n_min + np.arange(self.size[0])

    @property
    def m_sites(self):
        return self.m_min + np.arange(self.size[1])

    def to_json(self):
        d = asdict(self)
        d["kappa0"] = {"re": self.kappa0.real, "im": self.kappa0.imag}
        d["size"] = list(self.size)
        return d


def build_h2d(params):
    """Sparse complex-symmetric ``H_2D`` in CSR format.

    Row hops ``kappa0 cos(q m)`` link ``(n, m)`` and ``(n+1, m)``; rung hops
    ``-J`` link ``(n, m)`` and ``(n, m+1)``; the diagonal is ``n omega0``.  The
    reverse hops carry the same coefficients, so complex ``kappa0`` gives a
    non-Hermitian matrix equal to its transpose.
    """
    nx, ny = params.size
    idx = np.arange(nx * ny).reshape(nx, ny)
    n = params.n_sites
    m = params.m_sites
    diag = np.repeat(params.omega0 * n.astype(float), ny).astype(complex)

    row_hop = np.tile(params.kappa0 * np.cos(params.q * m), nx - 1)
    r_src = idx[:-1, :].ravel()
    r_dst = idx[1:, :].ravel()
    c_src = idx[:, :-1].ravel()
    c_dst = idx[:, 1:].ravel()
    c_hop = np.full(c_src.size, -params.J, dtype=complex)

    rows = np.concatenate([np.arange(nx * ny), r_src, r_dst, c_src, c_dst])
    cols = np.concatenate([np.arange(nx * ny), r_dst, r_src, c_dst, c_src])
    vals = np.concatenate([diag, row_hop, row_hop, c_hop, c_hop])
    return sp.csr_matrix((vals, (rows, cols)), shape=(nx * ny, nx * ny))


def initial_wavepacket(kind, n0, params):
    """``psi(n, m, 0) = x(n) y(m)`` with ``y(m) = (4 pi^2)^(-1/4) exp(i pi m / 2) exp(-m^2/4)``.

    ``kind="delta"`` puts ``x(n) = delta_{n, n0}``; ``kind="gaussian"`` uses
    ``exp(-(n - n0)^2 / 4)``.  ``n0`` needs ten sites of margin and the
    lattice must reach below ``m = 0`` far enough that ``exp(-m^2/4)`` is below
    ``1e-8`` just outside.  The product is scaled to unit norm (the Gaussian
    prefactor alone normalises only the continuum limit of the Gaussian case).
    """
    n = params.n_sites
    m = params.m_sites
    if not (n[0] + N_MARGIN <= n0 <= n[-1] - N_MARGIN):
        raise WindowError(f"n0={n0} needs {N_MARGIN} sites of margin inside rows {n[0]}..{n[-1]}")
    outside = min(-(m[0] - 1), m[-1] + 1)
    if outside < 0 or math.exp(-outside * outside / 4.0) >= PACKET_TAIL:
        raise WindowError(
            f"columns {m[0]}..{m[-1]} clip the y(m) packet; need exp(-m^2/4) < {PACKET_TAIL:g} at the boundary"
        )
    if kind == "delta":
        x = (n == n0).astype(complex)
    elif kind == "gaussian":
        x = np.exp(-((n - n0) ** 2) / 4.0).astype(complex)
    else:
        raise ValueError(f"unknown packet kind {kind!r}")
    y = (4.0 * math.pi**2) ** -0.25 * np.exp(0.5j * math.pi * m) * np.exp(-(m.astype(float) ** 2) / 4.0)
    psi = np.outer(x, y)
    return psi / np.linalg.norm(psi)


def arnoldi_expm(A, v, t, tol=1e-10, krylov_dim=30, max_substeps=100_000):
    """``exp(-i t A) v`` by Arnoldi projection with adaptive sub-steps.

    Each sub-step of length ``tau`` builds an orthonormal Krylov basis
    ``V_k`` with Hessenberg ``H_k`` (classical Gram-Schmidt applied twice, which
    stays orthogonal for non-normal ``A``) and returns
    ``beta V_k exp(-i tau H_k) e_1``.  The residual estimate
    ``beta |h_{k+1,k}| |e_k^T exp(-i tau H_k) e_1|`` must stay below ``tol``
    times ``beta``; the basis grows until it does, and ``tau`` is halved when
    ``krylov_dim`` vectors are not enough.
    """
    w = np.asarray(v, dtype=complex).copy()
    n = w.size
    k_max = min(krylov_dim, n)
    done = 0.0
    tau = float(t)
    substeps = 0
    while t - done > 1e-14 * max(t, 1.0):
        beta = np.linalg.norm(w)
        if beta == 0:
            return w
        tau = min(tau, t - done)
        V = np.zeros((k_max + 1, n), dtype=complex)
        H = np.zeros((k_max + 1, k_max), dtype=complex)
        V[0] = w / beta
        coef = None
        k = 0
        for j in range(k_max):
            u = A @ V[j]
            for _ in range(2):
                h = V[: j + 1].conj() @ u
                u -= h @ V[: j + 1]
                H[: j + 1, j] += h
            H[j + 1, j] = np.linalg.norm(u)
            k = j + 1
            if H[j + 1, j] < 1e-13:
                coef = scipy.linalg.expm(-1j * tau * H[:k, :k])[:, 0]
                err = 0.0
                break
            V[j + 1] = u / H[j + 1, j]
            if k % 5 == 0 or k == k_max:
                coef = scipy.linalg.expm(-1j * tau * H[:k, :k])[:, 0]
                err = abs(H[k, k - 1]) * abs(coef[-1])
                if err <= tol:
                    break
        while err > tol:
            tau *= 0.5
            substeps += 1
            if substeps > max_substeps:
                raise ConvergenceError(
                    f"Arnoldi step size collapsed to {tau:.3e} (error estimate {err:.2e})", iterations=substeps
                )
            coef = scipy.linalg.expm(-1j * tau * H[:k, :k])[:, 0]
            err = abs(H[k, k - 1]) * abs(coef[-1])
        w = beta * (coef @ V[:k])
        done += tau
        substeps += 1
        if substeps > max_substeps:
            raise ConvergenceError("too many Arnoldi sub-steps", iterations=substeps)
        if k < k_max // 2:
            tau *= 2.0
    return w


def evolve2d(initial, params, t, H=None, tol=1e-10):
    """``exp(-i H_2D t) psi`` for a state of shape ``size``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    psi = np.asarray(initial, dtype=complex)
    if t == 0:
        return psi.copy()
    H = build_h2d(params) if H is None else H
    out = arnoldi_expm(H, psi.ravel(), t, tol=tol)
    return out.reshape(psi.shape)


def dense_evolve2d(initial, params, t):
    """Dense-exponential reference, limited to 40 x 40 lattices."""
    if params.size[0] * params.size[1] > 1600:
        raise ValueError("dense reference limited to 1600 sites")
    H = build_h2d(params).toarray()
    psi = np.asarray(initial, dtype=complex)
    return (scipy.linalg.expm(-1j * t * H) @ psi.ravel()).reshape(psi.shape)


@dataclass
class Snapshot2D:
    t: float
    probs: np.ndarray


@dataclass
class Trace2D:
    """Accumulated ``P(n, m) = sum_{j>=1} p(n, m, j tau)``.

    ``normalized`` sums ``p / sum(p)`` instead, so that samples from a growing
    non-Hermitian state weigh equally.
    """

    accum: np.ndarray
    tau: float
    count: int
    stopped_at: float = None
    normalized: np.ndarray = None


def column_marginal(probs):
    """``sum_n p(n, m)`` for each column."""
    return np.asarray(probs).sum(axis=0)


def centroid_m(probs, params):
    marg = column_marginal(probs)
    return float(np.sum(marg * params.m_sites) / marg.sum())


def column_widths(probs, params, mass_fraction=0.01, columns=None):
    """Standard deviation in ``n`` of every column carrying enough weight.

    Columns whose marginal is below ``mass_fraction`` of the largest column
    marginal get ``nan``.
    """
    p = np.asarray(probs, dtype=float)
    marg = p.sum(axis=0)
    n = params.n_sites[:, None].astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = (p * n).sum(axis=0) / marg
        var = (p * (n - mean) ** 2).sum(axis=0) / marg
    widths = np.sqrt(var)
    widths[marg < mass_fraction * marg.max()] = np.nan
    return widths


def width_exponent(widths, params, m_range=(5, 25)):
    """Log-log slope of column width against ``m`` over ``m_range``; returns ``(z, stderr, samples)``."""
    m = params.m_sites
    sel = (m >= m_range[0]) & (m <= m_range[1]) & np.isfinite(widths) & (np.asarray(widths) > 0)
    if sel.sum() < 3:
        raise FitError(f"only {int(sel.sum())} usable columns in m range {m_range}")
    res = stats.linregress(np.log(m[sel]), np.log(np.asarray(widths)[sel]))
    return float(res.slope), float(res.stderr), int(sel.sum())


def breathing_period(widths, params):
    """Column distance between the first two width minima (parabola refined)."""
    w = np.where(np.isfinite(widths), widths, np.inf)
    m = params.m_sites
    found = []
    for k in range(1, w.size - 1):
        if np.isfinite(w[k - 1]) and np.isfinite(w[k + 1]) and w[k] < w[k - 1] and w[k] <= w[k + 1]:
            y0, y1, y2 = w[k - 1], w[k], w[k + 1]
            denom = y0 - 2.0 * y1 + y2
            found.append(m[k] + (0.5 * (y0 - y2) / denom if denom != 0 else 0.0))
    if len(found) < 2:
        raise FitError("fewer than two width minima in the trace")
    return float(found[1] - found[0])


def packet_velocity(result, t_window=2.0):
    """Slope of the column centroid against time for ``t <= t_window``."""
    sel = result.total_times <= t_window + 1e-9
    if sel.sum() < 3:
        raise FitError("too few samples for a velocity fit")
    return float(np.polyfit(result.total_times[sel], result.centroids[sel], 1)[0])


# (kappa0 / J, omega / J, omega0 / J, packet kind)
SCENARIOS = {
    "i": (1.0, 0.0, 0.5, "delta"),
    "ii": (1.0, 0.0, 0.5, "gaussian"),
    "iii": (0.25, 0.5, 0.5, "delta"),
    "iv": (0.25j, 0.5, 0.5, "delta"),
}


def scenario_params(sid, size=DEFAULT_SIZE, J=1.0):
    if sid not in SCENARIOS:
        raise ValueError(f"unknown scenario {sid!r}; expected one of {sorted(SCENARIOS)}")
    k, w, w0, kind = SCENARIOS[sid]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = Lattice2DParams.for_drive(k * J, w * J, J=J, omega0=w0 * J, size=size)
    return params, kind


@dataclass
class ScenarioResult:
    sid: str
    params: Lattice2DParams
    kind: str
    snapshots: list
    trace: Trace2D
    totals: np.ndarray = None
    total_times: np.ndarray = None
    centroids: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def write(self, outdir):
        """CSV matrices (rows ``n``, columns ``m``) plus a JSON sidecar; returns written paths."""
        import os

        paths = []
        header = ["n\\m"] + [str(m) for m in self.params.m_sites]

        def dump(path, mat):
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for n, row in zip(self.params.n_sites, mat):
                    w.writerow([str(n)] + [repr(float(v)) for v in row])
            paths.append(path)

        for snap in self.snapshots:
            dump(os.path.join(outdir, f"scenario_{self.sid}_snapshot_{snap.t:.6g}.csv"), snap.probs)
        dump(os.path.join(outdir, f"scenario_{self.sid}_trace.csv"), self.trace.accum)
        if self.trace.normalized is not None:
            dump(os.path.join(outdir, f"scenario_{self.sid}_trace_normalized.csv"), self.trace.normalized)
        side = os.path.join(outdir, f"scenario_{self.sid}.json")
        with open(side, "w") as fh:
            json.dump(
                {
                    "scenario": self.sid,
                    "packet": self.kind,
                    "params": self.params.to_json(),
                    "tau": self.trace.tau,
                    "trace_samples": self.trace.count,
                    "trace_stopped_at": self.trace.stopped_at,
                    "snapshot_times": [s.t for s in self.snapshots],
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        paths.append(side)
        return paths


def run_scenario(sid, size=DEFAULT_SIZE, snapshot_times=None, tau=DEFAULT_TAU, J=1.0, t_max=None, tol=1e-10):
    """Run one of the four reference scenarios ``i``..``iv`` (see :data:`SCENARIOS`)."""
    params, kind = scenario_params(sid, size, J)
    return run_lattice(params, kind, sid=sid, snapshot_times=snapshot_times, tau=tau, t_max=t_max, tol=tol)


def run_lattice(params, kind, n0=0, sid="custom", snapshot_times=None, tau=DEFAULT_TAU, t_max=None, tol=1e-10):
    """Evolve the ``kind`` packet launched at ``(n0, 0)`` and record snapshots and the trace.

    The state is stepped in increments of ``tau``; ``p(n, m, j tau)`` is added
    to the trace until the far-edge column holds more than ``1e-4`` of the
    total, and snapshots are taken at the requested times (default
    ``0, 2 pi/J, ..., 8 pi/J``).
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    J = params.J
    if snapshot_times is None:
        snapshot_times = [2.0 * math.pi * k / J for k in range(5)]
    snapshot_times = sorted(float(s) for s in snapshot_times)
    if snapshot_times and snapshot_times[0] < 0:
        raise ValueError("snapshot times must be >= 0")
    psi = initial_wavepacket(kind, n0, params)
    H = build_h2d(params)
    horizon = max(snapshot_times, default=0.0) if t_max is None else float(t_max)

    n_trace = int(math.floor(horizon / tau + 1e-9))
    events = {round(j * tau, 12): ("trace",) for j in range(1, n_trace + 1)}
    for ts in snapshot_times:
        key = round(ts, 12)
        events[key] = events.get(key, ()) + ("snap",)

    p = np.abs(psi) ** 2
    snaps = [Snapshot2D(0.0, p)] if 0.0 in events and "snap" in events.pop(0.0) else []
    accum = np.zeros(params.size)
    normed = np.zeros(params.size)
    count = 0
    stopped_at = None
    totals, times, cents = [float(p.sum())], [0.0], [centroid_m(p, params)]
    t = 0.0
    for target in sorted(events):
        psi = evolve2d(psi, params, target - t, H=H, tol=tol)
        t = target
        p = np.abs(psi) ** 2
        kinds = events[target]
        if "trace" in kinds:
            total = p.sum()
            totals.append(float(total))
            times.append(t)
            cents.append(centroid_m(p, params))
            if stopped_at is None:
                if column_marginal(p)[-1] > FAR_EDGE_STOP * total:
                    stopped_at = t
                else:
                    accum += p
                    normed += p / total
                    count += 1
        if "snap" in kinds:
            snaps.append(Snapshot2D(t, p))
    return ScenarioResult(
        sid,
        params,
        kind,
        snaps,
        Trace2D(accum, tau, count, stopped_at, normed),
        totals=np.array(totals),
        total_times=np.array(times),
        centroids=np.array(cents),
    )
