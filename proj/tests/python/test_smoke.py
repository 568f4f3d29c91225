"""Smoke tests for the Python module (built by CMake, found via PYTHONPATH)."""

import math

import numpy as np
import pytest

import _dimer as dm


@pytest.fixture(scope="module")
def params():
    return dm.DimerParams.from_nonlinearity(-3.0, 60)


def test_params_and_protocol():
    p = dm.DimerParams.from_nonlinearity(-3.0, 1000)
    assert p.particles == 1000
    assert p.p0 == 500.0
    assert p.nonlinearity == pytest.approx(-3.0)
    prot = dm.SweepProtocol(-2.0, 2.0, 5000.0)
    assert dm.detuning_at(prot, -5000.0) == pytest.approx(-2.0)
    assert dm.detuning_at(prot, 0.0) == pytest.approx(2.0)
    with pytest.raises(Exception):
        dm.SweepProtocol(2.0, -2.0, 10.0)


def test_spectrum_two_level():
    # N = 1: closed-form eigenvalues U/2 -+ sqrt(delta^2 + omega^2)/2
    p = dm.DimerParams(1.0, 0.3, 1)
    evals, evecs = dm.spectrum(p, 0.7)
    root = math.sqrt(0.7**2 + 1.0)
    assert evals[0] == pytest.approx(0.15 - root / 2)
    assert evals[1] == pytest.approx(0.15 + root / 2)
    assert len(evecs) == 2
    assert np.linalg.norm(evecs[0]) == pytest.approx(1.0)


def test_propagation_preserves_norm_and_eigenphase(params):
    psi = dm.eigenstate(params, -2.0, 5)
    prot = dm.SweepProtocol.frozen(-2.0, 100.0)
    out = dm.propagate(psi, params, prot, 0.0, 10.0)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-9)
    # frozen evolution keeps an eigenstate put, up to a global phase
    overlap = abs(np.vdot(psi, out))
    assert overlap == pytest.approx(1.0, abs=1e-7)


def test_husimi_grid_normalized(params):
    psi = dm.coherent_state(1.0, 0.3, 60)
    g = dm.husimi_grid(psi, params, 64, 64)
    assert g["values"].shape == (64, 64)
    assert g["values"].sum() * g["cell_area"] == pytest.approx(1.0, abs=1e-9)
    assert dm.wehrl_entropy(psi, params, 64, 64) > 0.0


def test_adiabatic_populations_sum_to_one(params):
    psi = dm.coherent_state(0.8, -0.2, 60)
    pops = dm.adiabatic_populations(psi, params, -2.0)
    assert pops.sum() == pytest.approx(1.0, abs=1e-10)
    assert dm.diagonal_entropy(dm.eigenstate(params, -2.0, 3), params, -2.0) == \
        pytest.approx(0.0, abs=1e-9)


def test_classical_flow_and_sampling(params):
    e = dm.mean_field_energy(0.0, 10.0, params, -2.0)
    assert np.isfinite(e)
    prot = dm.SweepProtocol.frozen(-2.0, 100.0)
    q1, p1 = dm.integrate_to(0.3, 5.0, params, prot, 0.0, 1.0)
    assert dm.mean_field_energy(q1, p1, params, -2.0) == pytest.approx(
        dm.mean_field_energy(0.3, 5.0, params, -2.0), abs=1e-6)
    psi = dm.eigenstate(params, -2.0, 5)
    ens = dm.sample_from_husimi(psi, params, 200, 7, 64, 64)
    assert len(ens["q"]) == 200
    assert ens["weight"].sum() == pytest.approx(1.0, abs=1e-9)
    # determinism
    ens2 = dm.sample_from_husimi(psi, params, 200, 7, 64, 64)
    assert np.array_equal(ens["q"], ens2["q"])


def test_separatrix_and_kruskal(params):
    assert dm.separatrix_info(params, -2.0) is None
    sep = dm.separatrix_info(params, 0.0)
    assert sep is not None
    total = sep["area_upper"] + sep["area_lower"] + sep["area_outer"]
    assert total == pytest.approx(2.0 * math.pi * 60, rel=1e-3)
    prot = dm.SweepProtocol(-2.0, 2.0, 50.0)
    evals, _ = dm.spectrum(params, -2.0)
    k = dm.kruskal_prediction(evals[4], params, prot)
    assert 0.0 <= k["return_probability"] <= 1.0


def test_return_curve_small(params):
    prot = dm.SweepProtocol(-2.0, 2.0, 1.0)
    members = [(1.0, dm.eigenstate(params, -2.0, 5))]
    rc = dm.return_curve(members, params, prot, [10.0], samples=150, seed=3)
    assert rc["failed"] == []
    assert 0.0 <= rc["quantum"][0] <= 1.0
    assert 0.0 <= rc["classical"][0] <= 1.0
