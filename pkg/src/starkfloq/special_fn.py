r"""Integer-order Bessel functions of the first kind for complex argument.

Two evaluation routes are used:

* the ascending power series

  .. math:: J_n(z) = (z/2)^n \sum_k \frac{(-z^2/4)^k}{k!\,(n+k)!}

  for small ``|z|`` where it is free of cancellation, and
* Miller's backward recurrence ``J_{k-1} = (2k/z) J_k - J_{k+1}`` normalised
  with the generating-function sum

  .. math:: e^{\mp iz} = J_0(z) + 2\sum_{k\ge1} (\mp i)^k J_k(z),

  choosing the sign that makes the sum dominant (upper sign for
  ``Im z >= 0``).  For purely imaginary argument every term of the sum is
  positive, so the normalisation never cancels.

Negative orders are reduced with :math:`J_{-n}(z) = (-1)^n J_n(z)`.

The modified Bessel function :math:`I_0` is also provided; it is the closed
form of the total level probability at resonance.
"""

import cmath
import math

import numpy as np
from scipy import special

from .errors import DomainError, RangeError

__all__ = ["bessel_j", "bessel_j_row", "bessel_j_signed", "bessel_tail_order", "modified_bessel_i0"]

MAX_ORDER = 10_000
MAX_ARGUMENT = 1.0e4
SERIES_RADIUS = 2.0
I0_MAX_ARGUMENT = 700.0

_RESCALE = 1.0e200
_RESCALE_LOG10 = 200


def _check(order, z):
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"Bessel argument must be finite, got {z!r}")
    if abs(order) > MAX_ORDER:
        raise RangeError(f"|order| = {abs(order)} exceeds supported {MAX_ORDER}")
    if abs(z) > MAX_ARGUMENT:
        raise RangeError(f"|argument| = {abs(z):.6g} exceeds supported {MAX_ARGUMENT:g}")


def _start_order(max_order, az):
    start = max(max_order, int(math.ceil(az))) + max(20, int(math.ceil(5.0 * math.sqrt(az))) + 10)
    return start + (start & 1)


def _series(n, z):
    """Power series for ``n >= 0``; accurate for ``|z| <= SERIES_RADIUS``."""
    if z == 0:
        return complex(1.0) if n == 0 else 0j
    w = -0.25 * z * z
    lead = cmath.exp(n * cmath.log(0.5 * z) - math.lgamma(n + 1))
    term = 1.0 + 0j
    total = term
    k = 0
    while True:
        k += 1
        term *= w / (k * (n + k))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return complex(_exact_axes(np.array([lead * total]), z, n)[0])


def _miller(max_order, z):
    """Backward recurrence returning ``J_0 .. J_max_order`` as a complex array."""
    az = abs(z)
    start = _start_order(max_order, az)
    phase = -1j if z.imag >= 0 else 1j
    inv_z2 = 2.0 / z

    vals = [0j] * (start + 1)
    scale = [0] * (start + 1)
    level = 0
    f_next = 0j
    f = 1e-30 + 0j
    # weights (phase)^k for k = start, start-1, ... via cyclic table
    cyc = [1.0 + 0j, phase, phase * phase, phase * phase * phase]
    norm = 0j
    for k in range(start, 0, -1):
        vals[k] = f
        scale[k] = level
        norm += 2.0 * cyc[k & 3] * f
        f_prev = k * inv_z2 * f - f_next
        f_next, f = f, f_prev
        if abs(f) > _RESCALE:
            f /= _RESCALE
            f_next /= _RESCALE
            norm /= _RESCALE
            level += 1
    vals[0] = f
    scale[0] = level
    norm += f

    out = np.asarray(vals[: max_order + 1], dtype=complex)
    shift = level - np.asarray(scale[: max_order + 1])
    if np.any(shift):
        with np.errstate(under="ignore"):
            out = out * np.power(10.0, -_RESCALE_LOG10 * shift.astype(float))
    try:
        target = cmath.exp(-1j * z) if z.imag >= 0 else cmath.exp(1j * z)
    except OverflowError as exc:
        raise RangeError(f"J_n({z!r}) overflows double precision") from exc
    out *= target / norm
    return _exact_axes(out, z, 0)


def _exact_axes(values, z, first_order):
    """Drop round-off components that vanish identically on the real and imaginary axes.

    ``J_n(x)`` is real for real ``x``; ``J_n(iy) = i^n I_n(y)`` is real for even
    ``n`` and imaginary for odd ``n``.
    """
    if z.imag == 0:
        return values.real.astype(complex)
    if z.real == 0:
        odd = (np.arange(values.size) + first_order) % 2 == 1
        return np.where(odd, 1j * values.imag, values.real.astype(complex))
    return values


def bessel_j_row(max_order, argument):
    """Return ``[J_0(z), ..., J_max_order(z)]`` from one backward-recurrence pass.

    Parameters
    ----------
    max_order : int
        Highest order returned, ``>= 0``.
    argument : complex
        The argument ``z``.

    Returns
    -------
    numpy.ndarray
        Complex array of length ``max_order + 1``.
    """
    max_order = int(max_order)
    if max_order < 0:
        raise RangeError("max_order must be >= 0")
    z = complex(argument)
    _check(max_order, z)
    if z == 0:
        row = np.zeros(max_order + 1, dtype=complex)
        row[0] = 1.0
        return row
    return _miller(max_order, z)


def bessel_j(order, argument):
    """Bessel function of the first kind :math:`J_n(z)` for integer ``n``.

    Examples
    --------
    >>> bessel_j(0, 0)
    (1+0j)
    >>> round(bessel_j(0, 1).real, 12)
    0.765197686558
    """
    n = int(order)
    z = complex(argument)
    _check(n, z)
    sign = 1.0
    if n < 0:
        n = -n
        sign = -1.0 if n & 1 else 1.0
    if z == 0:
        return complex(sign) if n == 0 else 0j
    if abs(z) <= SERIES_RADIUS:
        return sign * _series(n, z)
    return sign * _miller(n, z)[n]


def bessel_j_signed(max_order, argument):
    """Orders ``-max_order .. max_order`` as one array (index ``k + max_order``)."""
    row = bessel_j_row(max_order, argument)
    signs = np.where(np.arange(1, max_order + 1) % 2 == 1, -1.0, 1.0)
    return np.concatenate([(signs * row[1:])[::-1], row])


def bessel_tail_order(argument, tol=1e-15, minimum=20):
    """Smallest order ``D`` beyond which ``|J_k(z)| < tol * max_j |J_j(z)|`` for all ``k > D``.

    Bessel functions decay superexponentially once ``k`` passes ``|z|``, so the
    first order below the threshold past the turning point bounds the tail.
    """
    z = complex(argument)
    if z == 0:
        return 0
    top = int(math.ceil(abs(z))) + max(minimum, 20)
    while True:
        row = np.abs(bessel_j_row(top, z))
        peak = row.max()
        turn = min(int(math.ceil(abs(z))), top)
        below = np.nonzero(row[turn:] < tol * peak)[0]
        if below.size:
            return max(turn + int(below[0]) - 1, 0)
        top *= 2


def modified_bessel_i0(argument):
    """Modified Bessel function :math:`I_0(x)` for real ``x``.

    Equals :math:`(1/2\\pi)\\int_{-\\pi}^{\\pi} e^{x \\sin k}\\,dk`.  Raises
    :class:`OverflowError` for ``|x| > 700`` where the result approaches the
    double-precision limit.
    """
    x = float(argument)
    if not math.isfinite(x):
        raise DomainError("I0 argument must be finite")
    if abs(x) > I0_MAX_ARGUMENT:
        raise OverflowError(f"I0({x:g}) exceeds the overflow guard |x| <= {I0_MAX_ARGUMENT:g}")
    return float(special.i0(x))
