"""Spreading fronts of the level distribution and their dynamical exponent.

Real hopping produces a Bessel profile whose outermost local maximum is a
ballistic front; complex hopping produces a Gaussian core tracked by its
half-maximum point.  :func:`fit_exponent` returns the log-log slope ``z`` of
front position against time.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import FitError
from .resonance import heq_trajectory

__all__ = [
    "SpreadSeries",
    "ExponentFit",
    "wavefront_position",
    "fwhm_position",
    "fit_exponent",
    "spread_series",
    "auto_method",
]

FLOOR = 1e-10


def _levels(row, levels):
    row = np.asarray(row, dtype=float)
    if levels is None:
        levels = np.arange(row.size) - row.size // 2
    return row, np.asarray(levels, dtype=float)


def wavefront_position(row, levels=None, side=1):
    """Outermost local maximum of ``row`` on one side of level 0.

    Levels below ``1e-10`` of the peak are ignored so that round-off in the
    far tail cannot create spurious maxima.  The position is refined with a
    parabola through the maximum and its two neighbours.  ``side=-1`` uses the
    negative half and returns ``|n|``.
    """
    row, n = _levels(row, levels)
    if side < 0:
        row, n = row[::-1], -n[::-1]
    keep = row >= FLOOR * row.max()
    idx = np.nonzero((n > 0) & keep)[0]
    if idx.size < 3:
        raise FitError("not enough occupied levels to locate a wavefront")
    best = None
    for i in idx[::-1]:
        if 0 < i < row.size - 1 and row[i] > row[i - 1] and row[i] >= row[i + 1]:
            best = i
            break
    if best is None:
        raise FitError("profile has no local maximum on the positive side")
    y0, y1, y2 = row[best - 1], row[best], row[best + 1]
    denom = y0 - 2.0 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    return float(n[best] + shift)


def fwhm_position(row, levels=None):
    """Largest ``|n|`` with ``P_n >= P_0 / 2``, linearly interpolated.

    ``P_0`` is the occupation of level 0.  Both sides are scanned and the
    larger crossing is returned.
    """
    row, n = _levels(row, levels)
    zero = np.nonzero(n == 0)[0]
    if zero.size == 0:
        raise FitError("level 0 is not in the row")
    p0 = row[zero[0]]
    if not p0 > 0:
        raise FitError("P_0 must be positive")
    half = 0.5 * p0
    above = np.nonzero(row >= half)[0]
    if above.size == 0 or above.size == row.size:
        raise FitError("degenerate profile: no half-maximum crossing inside the window")
    best = 0.0
    for i in above:
        for j in (i - 1, i + 1):
            if 0 <= j < row.size and row[j] < half and abs(n[j]) > abs(n[i]):
                frac = (row[i] - half) / (row[i] - row[j])
                pos = abs(n[i] + frac * (n[j] - n[i]))
                best = max(best, pos)
    if best == 0.0:
        raise FitError("degenerate profile: half-maximum not crossed away from level 0")
    return float(best)


@dataclass
class SpreadSeries:
    """Front positions ``n_c(t)`` obtained with ``method`` (wavefront or fwhm)."""

    times: np.ndarray
    n_c: np.ndarray
    method: str
    nonmonotone: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.n_c = np.asarray(self.n_c, dtype=float)
        self.nonmonotone = int(np.sum(np.diff(self.n_c) < 0))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "n_c"])
            for t, x in zip(self.times, self.n_c):
                w.writerow([repr(float(t)), repr(float(x))])


@dataclass
class ExponentFit:
    method: str
    t_lo: float
    t_hi: float
    z: float
    stderr: float
    samples: int
    intercept: float = 0.0

    def to_json(self):
        return {
            "method": self.method,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "z": self.z,
            "stderr": self.stderr,
            "samples": self.samples,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    def __iter__(self):
        return iter((self.z, self.stderr))


def fit_exponent(series, t_window=None):
    """Least-squares slope of ``log n_c`` against ``log t`` within ``t_window``."""
    t = series.times
    lo, hi = (t.min(), t.max()) if t_window is None else t_window
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < 10:
        raise FitError(f"need at least 10 samples in [{lo:g}, {hi:g}], have {int(mask.sum())}")
    nc = series.n_c[mask]
    if np.any(nc <= 0):
        raise FitError("front positions must be positive for a log-log fit")
    res = stats.linregress(np.log(t[mask]), np.log(nc))
    return ExponentFit(
        method=series.method,
        t_lo=float(lo),
        t_hi=float(hi),
        z=float(res.slope),
        stderr=float(res.stderr),
        samples=int(mask.sum()),
        intercept=float(res.intercept),
    )


def auto_method(kappa0):
    return "wavefront" if complex(kappa0).imag == 0 else "fwhm"


def spread_series(kappa0, times, method="auto"):
    """Front positions of the resonant level distribution launched from level 0."""
    if method == "auto":
        method = auto_method(kappa0)
    finder = {"wavefront": wavefront_position, "fwhm": fwhm_position}.get(method)
    if finder is None:
        raise ValueError(f"unknown method {method!r}")
    traj = heq_trajectory(kappa0, times)
    n_c = [finder(row, traj.levels) for row in traj.level_probs]
    k0 = complex(kappa0)
    return SpreadSeries(
        traj.times,
        n_c,
        method,
        params={"kappa0": {"re": k0.real, "im": k0.imag}, "half_width": int(traj.levels[-1])},
    )
