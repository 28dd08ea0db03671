import cmath
import csv
import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from oracles import kspace_driven_chain
from starkfloq.errors import LeakError
from starkfloq.integrator import IntegratorConfig, evolve
from starkfloq.model import ChainParams, StateVector, build_hamiltonian, site_state
from starkfloq.propagator import (
    BlochTrajectory,
    bloch_trajectory,
    evolve_analytic,
    propagator_matrix,
    u_mn,
)

KAPPAS = [1.0, 1j, cmath.exp(0.25j * math.pi)]
T = 2 * math.pi


def test_identity_at_zero_and_period():
    for kappa in KAPPAS:
        for m in range(-3, 4):
            for n in range(-3, 4):
                assert u_mn(m, n, 0.0, kappa, 1.0) == (1 if m == n else 0)
                assert abs(u_mn(m, n, T, kappa, 1.0) - (m == n)) < 1e-12


def test_periodicity_of_every_element():
    sites = np.arange(-15, 16)
    for kappa in KAPPAS:
        for t in (0.3, 1.7, 4.4):
            a = propagator_matrix(sites, t, kappa, 1.0)
            b = propagator_matrix(sites, t + T, kappa, 1.0)
            assert np.abs(a - b).max() < 1e-12


def test_matches_dense_exponential_in_the_bulk():
    p = ChainParams(0.6 - 0.8j, 0, 1.3, (-60, 60))
    t = 1.1
    dense = expm(-1j * t * build_hamiltonian(p))
    sites = np.arange(-10, 11)
    idx = sites - p.window[0]
    closed = propagator_matrix(sites, t, p.kappa0, p.omega0)
    assert np.abs(dense[np.ix_(idx, idx)] - closed).max() < 1e-12


def test_unitary_for_real_hopping():
    sites = np.arange(-50, 51)
    for t in (0.4, 2.0, 5.5):
        u = propagator_matrix(sites, t, 0.9, 1.0)
        core = u[:, 40:61]  # columns far from the window edges
        gram = core.conj().T @ core
        assert np.abs(gram - np.eye(21)).max() < 1e-10


def test_group_property():
    sites = np.arange(-100, 101)
    k = 1 + 0.5j
    u1 = propagator_matrix(sites, 0.3, k, 1.0)
    u2 = propagator_matrix(sites, 0.7, k, 1.0)
    u12 = propagator_matrix(sites, 1.0, k, 1.0)
    core = slice(80, 121)
    assert np.abs((u2 @ u1)[core, core] - u12[core, core]).max() < 1e-9


def test_evolve_examples():
    s = site_state(0, (-40, 40))
    back = evolve_analytic(s, T, 1j, 1.0)
    np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-12)
    for t in (0.5, 2.0, 3.1):
        assert evolve_analytic(s, t, 0.8, 1.0).norm2() == pytest.approx(1, abs=1e-12)


def test_total_probability_agrees_with_integrator():
    p = ChainParams(1j, 0, 1, (-60, 60))
    s = site_state(0, p.window)
    analytic = evolve_analytic(s, math.pi, 1j, 1.0).norm2()
    numeric = evolve(s, p, math.pi, IntegratorConfig(sample_every=10**6)).final_state.norm2()
    assert abs(numeric / analytic - 1) < 1e-8


def test_against_momentum_space_oracle():
    sites = np.arange(-50, 51)
    s = StateVector((sites == 0).astype(complex), -50)
    got = evolve_analytic(s, 2.7, 1 + 1j, 1.0)
    ref = kspace_driven_chain(1 + 1j, 0.0, 1.0, 2.7, sites)
    assert np.abs(got.amplitudes - ref).max() < 1e-12


def test_leak_detection():
    s = site_state(0, (-6, 6))
    with pytest.raises(LeakError):
        evolve_analytic(s, 2.0, 2.0, 1.0)


def test_trajectory_examples():
    s = site_state(0, (-40, 40))
    grid = np.linspace(0, 3 * T, 61)
    tr = bloch_trajectory(s, ChainParams(1, 0, 1, (-40, 40)), grid)
    assert np.abs(tr.totals - 1).max() < 1e-12
    np.testing.assert_allclose(tr.rescaled.sum(axis=1), 1, atol=1e-12)
    np.testing.assert_array_equal(tr.totals, tr.site_probs.sum(axis=1))

    tr = bloch_trajectory(s, ChainParams(1j, 0, 1, (-40, 40)), [0, T])
    assert abs(tr.totals[-1] - 1) < 1e-10

    # a single site only ever gains weight (P = I_0(2 |Im w|) >= 1); a two-site superposition also loses some
    k = cmath.exp(0.25j * math.pi)
    tr = bloch_trajectory(s, ChainParams(k, 0, 1, (-40, 40)), np.linspace(0, T, 41))
    assert tr.totals.max() > 1 and tr.totals.min() == pytest.approx(1, abs=1e-12)
    pair = np.zeros(81, dtype=complex)
    pair[40:42] = 1 / math.sqrt(2)
    tr = bloch_trajectory(StateVector(pair, -40), ChainParams(k, 0, 1, (-40, 40)), np.linspace(0, T, 41))
    assert tr.totals.max() > 1 and tr.totals.min() < 1

    with pytest.raises(ValueError):
        bloch_trajectory(s, ChainParams(1, 0.1, 1, (-40, 40)), grid)


def test_csv_round_trip(tmp_path):
    tr = BlochTrajectory.from_probs([0.0, 0.5], [[0.25, 0.75], [0.5, 0.5]], n_min=-1, params={"kappa0": 1})
    path = tmp_path / "traj.csv"
    tr.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "P_total", "P_-1", "P_0"]
    assert [float(v) for v in rows[2]] == [0.5, 1.0, 0.5, 0.5]
    side = tmp_path / "traj.json"
    tr.write_sidecar(side)
    assert json.load(open(side)) == {"kappa0": 1}
