"""Independent reference implementations used only by the tests.

Nothing here imports starkfloq: Bessel values come from the defining power
series in multiprecision arithmetic, I_0 from adaptive quadrature.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 60


def bessel_series(n, z, tol_digits=50):
    """``J_n(z) = sum_k (-1)^k (z/2)^(2k+n) / (k! (n+k)!)`` summed in 60-digit arithmetic."""
    sign = 1
    if n < 0:
        n = -n
        sign = -1 if n % 2 else 1
    z = mp.mpc(complex(z).real, complex(z).imag)
    term = (z / 2) ** n / mp.factorial(n)
    total = mp.mpc(0)
    k = 0
    while True:
        total += term
        k += 1
        term *= -(z * z / 4) / (k * (n + k))
        if k > 5 and abs(term) <= mp.mpf(10) ** (-tol_digits) * max(abs(total), mp.mpf(10) ** -300):
            break
        if k > 2000:
            raise RuntimeError("series did not converge")
    return sign * complex(total)


def bessel_mp(n, z):
    """mpmath's own ``besselj`` (used for large arguments where the series is impractical)."""
    return complex(mp.besselj(n, mp.mpc(complex(z).real, complex(z).imag), maxterms=10**6))


def i0_quadrature(x):
    """``(1/2pi) int_{-pi}^{pi} exp(x sin k) dk`` by adaptive Gauss-Kronrod quadrature."""
    val, _ = integrate.quad(lambda k: math.exp(x * math.sin(k)), -math.pi, math.pi, epsabs=0, epsrel=1e-13, limit=200)
    return val / (2.0 * math.pi)


def uniform_chain_expm(kappa, t, half_width):
    """Dense ``exp(-i t H)`` column for ``H = (kappa/2)(shift + shift^T)`` started on the centre site."""
    from scipy.linalg import expm

    size = 2 * half_width + 1
    h = np.zeros((size, size), dtype=complex)
    idx = np.arange(size - 1)
    h[idx, idx + 1] = h[idx + 1, idx] = 0.5 * kappa
    e = np.zeros(size, dtype=complex)
    e[half_width] = 1.0
    return expm(-1j * t * h) @ e


def kspace_driven_chain(kappa0, omega, omega0, t, sites, quad_points=4096):
    """Amplitudes of the driven tilted chain from a site-0 start, via the exact momentum solution.

    With ``psi_n = exp(-i n omega0 t) b_n`` the problem becomes diagonal in
    momentum: ``b(k, t) = exp(-i int_0^t 2 kappa(s) cos(k - omega0 s) ds)``.
    The time integral is done in closed form and the inverse transform with
    a uniform ``quad_points``-point rule, which is exact for the band-limited
    integrand up to aliasing of orders beyond ``quad_points / 2``.
    """
    k = 2.0 * np.pi * np.arange(quad_points) / quad_points
    kappa0 = complex(kappa0)

    def primitive(s):
        # int 2 cos(omega s) cos(k - omega0 s) ds
        out = np.zeros_like(k, dtype=complex)
        for sgn in (1.0, -1.0):
            rate = omega0 - sgn * omega
            if abs(rate) < 1e-14:
                out += np.cos(k) * s
            else:
                out += -np.sin(k - rate * s) / rate
        return out

    phase = -1j * kappa0 * (primitive(t) - primitive(0.0))
    b_k = np.exp(phase)
    sites = np.asarray(sites)
    b_n = np.array([np.mean(b_k * np.exp(1j * n * k)) for n in sites])
    return np.exp(-1j * sites * omega0 * t) * b_n
