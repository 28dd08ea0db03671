import cmath
import json
import math

import numpy as np
import pytest

from oracles import bessel_series
from starkfloq.errors import WindowError
from starkfloq.model import ChainParams, build_hamiltonian, site_state
from starkfloq.spectrum import (
    biorthonormality_matrix,
    eigenpair,
    finite_chain_spectrum,
    ipr,
    ladder_size,
    left_eigenvector,
    right_eigenvector,
    unpaired_eigenvalues,
)

IPR_REAL = 0.418187772861310838  # sum J_k(1)^4 / (sum J_k(1)^2)^2, 30-digit mpmath
IPR_IMAG = 0.533835299152975446  # same at argument 1i


def test_zero_hopping_eigenvector_is_a_site():
    v = right_eigenvector(0, ChainParams(0, 0, 1.3, (-15, 15)))
    np.testing.assert_array_equal(v.amplitudes, site_state(0, (-15, 15)).amplitudes)


def test_translation_by_whole_sites():
    p = ChainParams(0.8 - 0.3j, 0, 1, (-40, 40))
    v0 = right_eigenvector(0, p).amplitudes
    v5 = right_eigenvector(5, p).amplitudes
    np.testing.assert_array_equal(v5[5:], v0[:-5])


def test_right_eigenvector_values():
    p = ChainParams(-0.5, 0, 1, (-20, 20))  # -2 kappa / omega0 = 1
    v = right_eigenvector(0, p)
    for d in range(-6, 7):
        assert v.amplitude(d) == pytest.approx(bessel_series(d, 1.0), rel=1e-13, abs=1e-300)
    assert v.amplitude(0) == pytest.approx(0.765197686557966551, rel=1e-14)
    assert v.amplitude(1) == pytest.approx(0.440050585744933516, rel=1e-14)
    assert v.amplitude(-1) == pytest.approx(-0.440050585744933516, rel=1e-14)


def test_eigen_equation_holds_in_the_bulk():
    p = ChainParams(1 + 1j, 0, 1, (-60, 60))
    h = build_hamiltonian(p)
    for m in (-10, 0, 7):
        pair = eigenpair(m, p)
        assert pair.energy == m
        r = pair.right.amplitudes
        assert np.abs(h @ r - m * r).max() < 1e-13
        lft = pair.left.amplitudes
        assert np.abs(h.conj().T @ lft - np.conj(m) * lft).max() < 1e-13


def test_left_vectors():
    p_real = ChainParams(0.7, 0, 1, (-30, 30))
    np.testing.assert_array_equal(left_eigenvector(2, p_real).amplitudes, right_eigenvector(2, p_real).amplitudes)
    p = ChainParams(1j, 0, 1, (-30, 30))
    left = left_eigenvector(0, p)
    for d in range(-4, 5):
        assert left.amplitude(d) == pytest.approx(bessel_series(d, 2j), rel=1e-13)


def test_clipped_rung_rejected():
    p = ChainParams(3, 0, 1, (-20, 20))
    with pytest.raises(WindowError):
        right_eigenvector(15, p)
    with pytest.raises(WindowError):
        right_eigenvector(0, ChainParams(8, 0, 1, (-12, 12)))


def test_ipr_values():
    assert ipr(site_state(0, (-5, 5))) == 1.0
    p = ChainParams(-0.5, 0, 1, (-100, 100))
    assert ipr(right_eigenvector(0, p)) == pytest.approx(IPR_REAL, abs=1e-12)
    p = ChainParams(-0.5j, 0, 1, (-100, 100))
    assert ipr(right_eigenvector(0, p)) == pytest.approx(IPR_IMAG, abs=1e-12)
    with pytest.raises(ValueError):
        ipr(np.zeros(4))


def test_ipr_independent_of_rung():
    p = ChainParams(0.6 + 0.4j, 0, 1, (-100, 100))
    values = [ipr(right_eigenvector(m, p)) for m in (-60, -20, 0, 33, 70)]
    assert max(values) - min(values) < 1e-10


def test_biorthonormality_examples():
    assert biorthonormality_matrix(ChainParams(0.9, 0, 1, (-60, 60)), rung_range=(0, 0)) < 1e-12
    assert biorthonormality_matrix(ChainParams(1 + 1j, 0, 1, (-100, 100))) < 1e-10
    assert biorthonormality_matrix(ChainParams(1j, 0, 1, (-200, 200)), rung_range=(-50, 50)) < 1e-10


def test_small_chain_spectrum_is_exact():
    rep = finite_chain_spectrum(3, ChainParams(0, 0, 1))
    assert [e for e in rep.eigenvalues] == [-1, 0, 1]


def test_central_ladder_and_growth():
    p = ChainParams(1 + 1j, 0, 1)
    rep = finite_chain_spectrum(101, p, ladder_window=21)
    assert rep.max_imag < 1e-6 and rep.max_spacing_dev < 1e-6
    re = np.array([e.real for e in rep.eigenvalues])
    assert np.all(np.diff(re) >= 0)
    sizes = [finite_chain_spectrum(n, p).ladder_size for n in (21, 41, 101)]
    assert sizes[0] < sizes[1] < sizes[2]


def test_eigenvalues_not_conjugate_paired():
    rep = finite_chain_spectrum(21, ChainParams(1 + 1j, 0, 1))
    assert len(unpaired_eigenvalues(rep.eigenvalues)) >= 1


def test_ladder_size_helper():
    vals = np.array([-2, -1, 0, 1, 2], dtype=complex)
    assert ladder_size(vals, 1.0) == 5
    vals[0] += 0.1j
    assert ladder_size(vals, 1.0) == 3


def test_report_json():
    rep = finite_chain_spectrum(11, ChainParams(0.5j, 0, 1))
    data = json.loads(rep.dumps())
    assert set(data) >= {"eigenvalues", "ladder_window", "max_imag", "max_spacing_dev"}
    assert set(data["eigenvalues"][0]) == {"re", "im"}
    with pytest.raises(ValueError):
        finite_chain_spectrum(2, ChainParams())
