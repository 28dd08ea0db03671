"""Resonant drive (omega = omega0): spreading over the ladder levels.

Real hopping gives a ballistic Bessel front; any imaginary part turns the
profile into a Gaussian whose width grows like sqrt(t), while the total
level weight grows like I_0(2 |Im kappa0| t).
"""

import cmath
import math

import numpy as np

from starkfloq.exponent import fit_exponent, spread_series
from starkfloq.resonance import gaussian_profile_check, heq_trajectory, total_level_probability

times = np.linspace(10, 100, 91)
for kappa in (1.0, 0.5, 1j, cmath.exp(0.25j * math.pi), 0.5 + 0.5j):
    fit = fit_exponent(spread_series(kappa, times), (10, 100))
    print(f"kappa0={kappa:.3f}: {fit.method:9s} z = {fit.z:.3f} +- {fit.stderr:.3f}")

for t in (1.0, 5.0, 20.0):
    tr = heq_trajectory(1j, [t])
    print(f"kappa0=i t={t:4.0f}: level total {tr.totals[0]:.10e} vs I0(2t) {total_level_probability(1j, t):.10e}")

tr = heq_trajectory(1j, [50.0])
g = gaussian_profile_check(tr.level_probs[0], 1j, 50.0, tr.levels)
print(f"Gaussian fit at t=50: inverse width {g.inverse_width:.5f} (predicted {g.predicted_inverse_width:.5f}), R^2={g.r2:.5f}")
