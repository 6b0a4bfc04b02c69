import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from ottospin import spinops
from ottospin.lmgcrit import gamma_crit
from ottospin.spinops import SpinBasis
from ottospin.states import entropy, gibbs_state, mean_energy
from ottospin.unitary import (DriveProtocol, evolve_unitary, hamiltonian_at, hdot_at, lmg_hamiltonian,
                              stroke_work)

from conftest import random_density

W12_QUBIT = -0.462117157260009758502318483644


def thermal(b, lam, T):
    return gibbs_state(-lam * spinops.jz(b), 1 / T)


def test_protocol_endpoints():
    p = DriveProtocol(1, 3, 2.0, 5.0)
    assert p.lam(0) == 1 and p.lam(5.0) == 3
    assert p.gamma(0) == 0 and p.gamma(5.0) == 0
    assert p.gamma(2.5) == pytest.approx(2.0)
    r = p.reversed()
    assert r.lam(0) == 3 and r.lam(5.0) == 1
    assert r.reversed() == p


@given(st.floats(0, 1))
def test_gamma_symmetric(s):
    p = DriveProtocol(1, 3, 1.7, 4.0)
    assert p.gamma(4.0 * s) == pytest.approx(p.gamma(4.0 - 4.0 * s), abs=1e-12)


def test_protocol_rejects_times_outside_stroke():
    with pytest.raises(ValueError):
        DriveProtocol(1, 3, 1.0, 2.0).lam(2.5)
    with pytest.raises(ValueError):
        DriveProtocol(1, 3, t_u=-1)


def test_hamiltonian_at_start_is_non_interacting():
    b = SpinBasis(5)
    np.testing.assert_allclose(hamiltonian_at(DriveProtocol(1.5, 3, 2, 4), 0.0, b), -1.5 * spinops.jz(b))


def test_lmg_hamiltonian_normalisation():
    b = SpinBasis(3)
    h = lmg_hamiltonian(2.0, 1.2, b)
    np.testing.assert_allclose(h, -2.0 * spinops.jz(b) - (1.2 / 6) * spinops.jx_squared(b))


def test_hdot_vertex_has_no_interaction_term():
    b = SpinBasis(4)
    p = DriveProtocol(1, 3, 2.0, 6.0)
    np.testing.assert_allclose(hdot_at(p, 3.0, b), -(2 / 6) * spinops.jz(b), atol=1e-15)


def test_hdot_without_interaction_is_jz_only():
    b = SpinBasis(4)
    hd = hdot_at(DriveProtocol(1, 3, 0.0, 2.0), 0.7, b)
    np.testing.assert_allclose(hd, -1.0 * spinops.jz(b))


@pytest.mark.parametrize("t", [0.3, 1.1, 2.9])
def test_hdot_finite_difference(t):
    b = SpinBasis(6)
    p = DriveProtocol(1, 3, 2.5, 4.0)
    errs = []
    for h in (1e-2, 5e-3):
        fd = (hamiltonian_at(p, t + h, b) - hamiltonian_at(p, t - h, b)) / (2 * h)
        errs.append(np.abs(fd - hdot_at(p, t, b)).max())
    # H is quadratic in t, so the central difference is exact up to rounding
    assert max(errs) < 1e-10


def test_hdot_undefined_for_sudden_stroke():
    with pytest.raises(ValueError):
        hdot_at(DriveProtocol(1, 3), 0.0, SpinBasis(1))


@pytest.mark.parametrize("t_u", [0.5, 3.0, 40.0])
def test_commuting_drive_keeps_populations(t_u):
    b = SpinBasis(6)
    rho0 = thermal(b, 1.0, 2.0)
    out, _ = evolve_unitary(rho0, DriveProtocol(1, 3, 0.0, t_u), b)
    np.testing.assert_allclose(np.diag(out).real, np.diag(rho0).real, atol=1e-14)


def test_sudden_quench_leaves_state():
    b = SpinBasis(4)
    rho0 = thermal(b, 1.0, 1.0)
    out, traj = evolve_unitary(rho0, DriveProtocol(1, 3, 3.0, 0.0), b)
    np.testing.assert_array_equal(out, rho0)
    assert len(traj.t) == 1


def test_adiabatic_limit_keeps_level_populations():
    b = SpinBasis(10)
    p = DriveProtocol(1, 3, 0.75, 200.0)
    assert p.gamma_bar < gamma_crit(1, 3)
    rho0 = thermal(b, 1.0, 1.0)
    out, _ = evolve_unitary(rho0, p, b, steps=4000, record=False)
    # the final Hamiltonian is diagonal again, so populations are read off in the J_z basis
    assert np.abs(np.diag(out).real - np.diag(rho0).real).max() < 1e-4


def test_single_step_matches_expm():
    b = SpinBasis(2)
    p = DriveProtocol(1, 3, 2.0, 0.4)
    rho0 = random_density(b.dim, 2)
    out, _ = evolve_unitary(rho0, p, b, steps=1, n_samples=1, record=False)
    u = expm(-1j * 0.4 * hamiltonian_at(p, 0.2, b))
    np.testing.assert_allclose(out, u @ rho0 @ u.conj().T, atol=1e-13)


def test_midpoint_second_order_and_cf4_fourth_order():
    b = SpinBasis(6)
    p = DriveProtocol(1, 3, 3.0, 10.0)
    rho0 = thermal(b, 1.0, 1.0)
    ref, _ = evolve_unitary(rho0, p, b, steps=4000, record=False, scheme="cf4")

    def err(n, scheme):
        out, _ = evolve_unitary(rho0, p, b, steps=n, record=False, scheme=scheme)
        return np.abs(out - ref).max()

    assert 3.5 < err(200, "midpoint") / err(400, "midpoint") < 4.5
    assert 13 < err(100, "cf4") / err(200, "cf4") < 19


def test_unknown_scheme():
    with pytest.raises(ValueError):
        evolve_unitary(np.eye(2) / 2, DriveProtocol(1, 3, 0, 1), scheme="euler")


@given(st.integers(0, 500), st.sampled_from([1, 2.5, 6]), st.floats(0.0, 4.0), st.floats(0.5, 20))
def test_unitarity_and_parity(seed, j, gbar, t_u):
    b = SpinBasis(j)
    rho0 = random_density(b.dim, seed)
    out, traj = evolve_unitary(rho0, DriveProtocol(1, 3, gbar, t_u), b, steps=200, n_samples=20)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(out)), np.sort(np.linalg.eigvalsh(rho0)), atol=1e-9)
    assert traj.spectrum_drift < 1e-9
    assert np.ptp(traj.entropy) < 1e-9
    assert np.ptp(traj.parity) < 1e-9
    assert entropy(out) == pytest.approx(entropy(rho0), abs=1e-9)


@pytest.mark.parametrize("j, T0", [(0.5, 1.0), (5, 1.0), (20, 8.0)])
def test_linear_adiabat_of_non_interacting_stroke(j, T0):
    b = SpinBasis(j)
    rho0 = thermal(b, 1.0, T0)
    _, traj = evolve_unitary(rho0, DriveProtocol(1, 3, 0.0, 2.0), b, steps=50, n_samples=50)
    line = T0 / traj.energy[0] * traj.energy
    np.testing.assert_allclose(traj.t_star, line, atol=1e-8)


def test_stroke_work_values():
    b = SpinBasis(0.5)
    rho = thermal(b, 1.0, 1.0)
    h1, h2 = -spinops.jz(b), -3 * spinops.jz(b)
    assert stroke_work(rho, rho, h1, h1) == 0
    assert stroke_work(rho, rho, h1, h2) == pytest.approx(W12_QUBIT, abs=1e-14)
    assert mean_energy(rho, h2) == pytest.approx(-0.6932, abs=1e-4)


def test_commuting_drive_rotates_coherences_exactly():
    b = SpinBasis(3)
    rho0 = random_density(b.dim, 8)
    p = DriveProtocol(1, 3, 0.0, 1.5)
    out, _ = evolve_unitary(rho0, p, b, steps=100, record=False)
    # integral of lambda over the ramp is t_u (lambda_i + lambda_f) / 2
    u = expm(1j * 1.5 * 2.0 * spinops.jz(b))
    np.testing.assert_allclose(out, u @ rho0 @ u.conj().T, atol=1e-12)
    stepped, _ = evolve_unitary(rho0, DriveProtocol(1, 3, 1e-300, 1.5), b, steps=100, record=False)
    np.testing.assert_allclose(out, stepped, atol=1e-12)
