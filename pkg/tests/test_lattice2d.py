import math
import os
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from oracles import bessel_mp
from starkfloq.errors import FitError, WindowError
from starkfloq.lattice2d import (
    DEFAULT_SIZE,
    Lattice2DParams,
    arnoldi_expm,
    breathing_period,
    build_h2d,
    column_widths,
    dense_evolve2d,
    evolve2d,
    initial_wavepacket,
    packet_offset,
    packet_velocity,
    run_lattice,
    run_scenario,
    scenario_params,
    width_exponent,
)


@pytest.fixture(scope="module")
def scenarios():
    return {sid: run_scenario(sid) for sid in ("i", "ii", "iii", "iv")}


def test_structure_without_row_hopping():
    H = build_h2d(Lattice2DParams(kappa0=0.0, size=(6, 9)))
    A = H.toarray().reshape(6, 9, 6, 9)
    for a in range(6):
        for b in range(6):
            if a != b:
                assert not A[a, :, b, :].any()
    np.testing.assert_array_equal(A[0, :, 0, :], A[3, :, 3, :] - 3 * 0.5 * np.eye(9))


def test_uniform_rows_when_q_is_zero():
    p = Lattice2DParams(kappa0=0.3 + 0.1j, q=0.0, size=(5, 7))
    A = build_h2d(p).toarray().reshape(5, 7, 5, 7)
    hops = np.array([A[n, m, n + 1, m] for n in range(4) for m in range(7)])
    np.testing.assert_array_equal(hops, np.full(28, 0.3 + 0.1j))


def test_row_hopping_modulation_and_symmetry():
    p = Lattice2DParams(kappa0=0.25j, q=0.25, size=(4, 8))
    H = build_h2d(p)
    assert sp.issparse(H)
    assert (H - H.T).count_nonzero() == 0
    A = H.toarray().reshape(4, 8, 4, 8)
    for k, m in enumerate(p.m_sites):
        assert A[1, k, 2, k] == pytest.approx(0.25j * math.cos(0.25 * m), abs=1e-15)
        if k + 1 < 8:
            assert A[1, k, 1, k + 1] == -1
    assert (H - H.conj().T).count_nonzero() > 0


def test_hermitian_for_real_hopping_and_conserves():
    p = Lattice2DParams(kappa0=0.4, q=0.2, size=(30, 40))
    H = build_h2d(p)
    assert abs(H - H.conj().T).max() == 0
    psi = initial_wavepacket("gaussian", 0, p)
    out = evolve2d(psi, p, 6.0, H=H)
    assert abs(np.sum(np.abs(out) ** 2) - 1) < 1e-8


def test_size_guard_and_warning():
    with pytest.raises(WindowError):
        Lattice2DParams(kappa0=0.25, size=(2, 10))
    with pytest.warns(UserWarning):
        Lattice2DParams(kappa0=0.9, size=(5, 5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Lattice2DParams(kappa0=0.5, size=(5, 5))


def test_delta_packet_has_one_nonzero_row():
    p = Lattice2DParams(kappa0=0.25, size=(30, 40))
    psi = initial_wavepacket("delta", 3, p)
    rows = np.nonzero(np.abs(psi).sum(axis=1))[0]
    assert rows.tolist() == [list(p.n_sites).index(3)]
    assert np.sum(np.abs(psi) ** 2) == pytest.approx(1, abs=1e-14)


def test_packet_momentum_and_offset():
    p = Lattice2DParams(kappa0=0.25, size=(30, 40))
    psi = initial_wavepacket("delta", 0, p)
    y = psi[15]
    assert packet_offset() == 8 and p.m_sites[0] == -8
    k = p.m_sites.tolist().index(1)
    assert np.angle(y[k + 1] / y[k]) == pytest.approx(math.pi / 2, abs=1e-12)


def test_gaussian_fwhm():
    p = Lattice2DParams(kappa0=0.25, size=(41, 40))
    x = np.abs(initial_wavepacket("gaussian", 0, p)[:, 8]) ** 2
    n = p.n_sites.astype(float)
    np.testing.assert_allclose(x / x.max(), np.exp(-(n**2) / 2.0), rtol=1e-13)
    # half-maximum crossings interpolated on the integer grid
    half = 0.5 * x.max()
    inside = np.nonzero(x >= half)[0]
    lo_i, hi_i = inside[0], inside[-1]
    lo = n[lo_i] - (x[lo_i] - half) / (x[lo_i] - x[lo_i - 1])
    hi = n[hi_i] + (x[hi_i] - half) / (x[hi_i] - x[hi_i + 1])
    assert hi - lo == pytest.approx(2 * math.sqrt(2 * math.log(2)), abs=0.15)


def test_packet_margin_errors():
    p = Lattice2DParams(kappa0=0.25, size=(30, 40))
    with pytest.raises(WindowError):
        initial_wavepacket("delta", 10, p)
    with pytest.raises(WindowError):
        initial_wavepacket("delta", 0, Lattice2DParams(kappa0=0.25, size=(30, 40), m_min=-3))
    with pytest.raises(ValueError):
        initial_wavepacket("plane", 0, p)


def test_zero_time_is_identity():
    p = Lattice2DParams(kappa0=0.25j, size=(30, 30))
    psi = initial_wavepacket("delta", 0, p)
    np.testing.assert_array_equal(evolve2d(psi, p, 0.0), psi)
    with pytest.raises(ValueError):
        evolve2d(psi, p, -1.0)


def test_arnoldi_matches_dense_oracle():
    p = Lattice2DParams(kappa0=0.25 * (1 + 1j) / math.sqrt(2), q=0.25, size=(20, 20), m_min=-10)
    rng = np.random.default_rng(1)
    psi = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
    psi /= np.linalg.norm(psi)
    for t in (0.3, 2.0, 7.5):
        err = np.abs(evolve2d(psi, p, t) - dense_evolve2d(psi, p, t)).max()
        assert err < 1e-8


def test_arnoldi_on_small_invariant_subspace():
    A = sp.diags([1.0, 2.0, 3.0]).tocsr()
    v = np.array([1.0, 0.0, 0.0], dtype=complex)
    out = arnoldi_expm(A, v, 2.0)
    np.testing.assert_allclose(out, [np.exp(-2j), 0, 0], atol=1e-14)


def test_rung_walk_is_a_bessel_walk():
    p = Lattice2DParams(kappa0=0.0, J=1.0, size=(21, 81), m_min=-40)
    psi = np.zeros(p.size, dtype=complex)
    psi[10, 40] = 1
    t = 6.0
    out = np.abs(evolve2d(psi, p, t)) ** 2
    assert not out[np.arange(21) != 10].any()
    for d in range(-30, 31):
        ref = float(abs(bessel_mp(d, 2.0 * t)) ** 2)
        assert abs(out[10, 40 + d] - ref) < 1e-8


def test_dense_reference_size_limit():
    p = Lattice2DParams(kappa0=0.25, size=(41, 41))
    with pytest.raises(ValueError):
        dense_evolve2d(np.zeros(p.size), p, 1.0)


def test_scenario_parameters():
    expect = {"i": (1.0, 0.0, "delta"), "ii": (1.0, 0.0, "gaussian"), "iii": (0.25, 0.25, "delta"), "iv": (0.25j, 0.25, "delta")}
    for sid, (k, q, kind) in expect.items():
        p, got_kind = scenario_params(sid)
        assert (p.kappa0, p.q, p.omega0, p.J, p.size, got_kind) == (k, q, 0.5, 1.0, DEFAULT_SIZE, kind)
    with pytest.raises(ValueError):
        scenario_params("v")


def test_conservation_for_real_scenarios(scenarios):
    for sid in ("i", "ii", "iii"):
        assert np.abs(scenarios[sid].totals - 1).max() < 1e-8
    totals = scenarios["iv"].totals
    assert totals[-1] > 10


def test_trace_bookkeeping(scenarios):
    res = scenarios["iii"]
    tr = res.trace
    assert tr.count > 0 and tr.stopped_at is not None
    assert tr.accum.sum() == pytest.approx(tr.count, rel=1e-8)
    assert [s.t for s in res.snapshots] == pytest.approx([2 * math.pi * k for k in range(5)])


def test_packet_velocity_is_ballistic(scenarios):
    # the stated velocity 2J, measured over the first two time units
    for sid, res in scenarios.items():
        assert packet_velocity(res) == pytest.approx(2.0, rel=0.05), sid


def test_packet_velocity_matches_momentum_spread(scenarios):
    # |y(k)|^2 ~ exp(-2 (k - pi/2)^2) gives <2J sin k> = 2J exp(-1/8)
    for sid in ("i", "ii", "iii"):
        assert packet_velocity(scenarios[sid]) == pytest.approx(2 * math.exp(-0.125), rel=0.01)


def test_breathing_and_exponents(scenarios):
    res = scenarios["i"]
    w = column_widths(res.trace.normalized, res.params)
    bloch_columns = 2 * res.params.J * 2 * math.pi / res.params.omega0
    assert breathing_period(w, res.params) == pytest.approx(bloch_columns, rel=0.1)
    res = scenarios["iv"]
    z, err, k = width_exponent(column_widths(res.trace.normalized, res.params), res.params)
    assert z == pytest.approx(0.5, abs=0.15) and k >= 10


def test_width_fit_errors():
    p = Lattice2DParams(kappa0=0.25, size=(30, 40))
    with pytest.raises(FitError):
        width_exponent(np.full(40, np.nan), p)
    with pytest.raises(FitError):
        breathing_period(np.linspace(1, 2, 40), p)


def test_far_edge_stop():
    p, kind = scenario_params("iii", size=(30, 24))
    res = run_lattice(p, kind, snapshot_times=[], t_max=12.0)
    assert res.trace.stopped_at is not None and res.trace.stopped_at < 12.0
    assert res.trace.count == pytest.approx(res.trace.stopped_at / 0.1 - 1, abs=1e-9)


def test_scenario_outputs(scenarios, tmp_path):
    paths = scenarios["iii"].write(str(tmp_path))
    names = sorted(os.path.basename(x) for x in paths)
    assert "scenario_iii_trace.csv" in names and "scenario_iii.json" in names
    assert "scenario_iii_snapshot_0.csv" in names and "scenario_iii_snapshot_6.28319.csv" in names
    lines = open(tmp_path / "scenario_iii_trace.csv").read().splitlines()
    assert len(lines) == 31 and len(lines[0].split(",")) == 61
