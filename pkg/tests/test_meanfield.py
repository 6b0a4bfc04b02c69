import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ottospin import meanfield
from ottospin.experiments import meanfield_curve
from ottospin.lindblad import bose_factor
from ottospin.meanfield import (MeanFieldRun, amplitude, dist, m0_thermal, m_steady, superrad_rhs,
                                t_T_analytic, t_tilde_from_m0)
from ottospin.otto import CycleConfig

M0_QUBIT_T1 = 0.231058578630004879251159241822  # tanh(1/2)/2

js = st.sampled_from([0.5, 1, 2, 5, 10, 20, 40, 100])
nbs = st.floats(0.0, 20.0)


def test_m0_limits():
    assert m0_thermal(7, 1e4, 1.0) == pytest.approx(7)
    assert m0_thermal(0.5, 1.0, 1.0) == pytest.approx(M0_QUBIT_T1, abs=1e-14)
    with pytest.raises(ValueError):
        m0_thermal(3, 0.0, 1.0)
    # beta -> 0 sends m0 -> 0
    assert abs(m0_thermal(3, 1e-9, 1.0)) < 1e-7


@given(js, nbs)
def test_steady_state_is_root(j, n_b):
    m = m_steady(j, n_b)
    assert m >= 0
    assert superrad_rhs(m, j, n_b, 0.1) == pytest.approx(0, abs=1e-12 * max(1, j * j))
    # quadratic formula for m^2 + (1 + 2 n_b) m - j (j + 1) = 0
    b = 1 + 2 * n_b
    oracle = (-b + math.sqrt(b * b + 4 * j * (j + 1))) / 2
    assert m == pytest.approx(oracle, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("j", [0.5, 3, 20])
def test_zero_temperature_steady_state(j):
    assert amplitude(j, 0.0) == pytest.approx(j + 0.5)
    assert m_steady(j, 0.0) == pytest.approx(j, abs=1e-12)
    assert superrad_rhs(j, j, 0.0, 0.3) == 0


def test_rhs_at_zero():
    assert superrad_rhs(0.0, 4, 1.3, 0.2) == pytest.approx(0.2 * 20)


@given(js, st.floats(0.05, 10), st.floats(0.3, 3))
def test_tanh_solution_round_trip(j, T, lam):
    n_b = bose_factor(1 / T, lam)
    m0 = m0_thermal(j, 1 / (T * 2), lam)  # start colder than the bath
    if m0 >= m_steady(j, n_b):
        return
    run = MeanFieldRun(j, n_b, 0.1, m0)
    assert float(run.m_of_t(0.0)) == pytest.approx(m0, abs=1e-12 * max(1, j))
    assert float(run.m_of_t(1e6)) == pytest.approx(run.m_ss, rel=1e-12)


@given(js, nbs)
def test_solution_satisfies_ode(j, n_b):
    run = MeanFieldRun(j, n_b, 0.1, 0.0)
    h = 1e-4
    for t in (0.3, 1.0, 4.0):
        fd = (run.m_of_t(t + h) - run.m_of_t(t - h)) / (2 * h)
        rhs = superrad_rhs(run.m_of_t(t), j, n_b, 0.1)
        assert fd == pytest.approx(rhs, rel=1e-6, abs=1e-8 * max(1, j * j))


def test_monotone_relaxation():
    run = MeanFieldRun(20, bose_factor(0.25, 1.0), 0.1, m0_thermal(20, 1 / 8, 1.0))
    m = run.m_of_t(np.linspace(0, 20, 500))
    assert np.all(np.diff(m) >= 0) and m[-1] > m[0]


@pytest.mark.parametrize("j", [5, 10, 20, 40])
def test_t_tilde_negative_for_thermal_start(j):
    n_b = bose_factor(0.25, 1.0)
    assert t_tilde_from_m0(j, n_b, 0.1, m0_thermal(j, 1 / 8, 1.0)) < 0


def test_t_tilde_vanishes_for_large_j():
    n_b, m0 = 1.0, 2.0
    vals = [abs(t_tilde_from_m0(j, n_b, 0.1, m0)) for j in (1e3, 1e4, 1e5)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_t_tilde_rejects_out_of_branch():
    with pytest.raises(ValueError):
        t_tilde_from_m0(2, 0.0, 0.1, 10.0)


def test_analytic_time_inverse_j():
    t = [t_T_analytic(j, 0.1, 1e-5) for j in (5, 10, 20, 40)]
    np.testing.assert_allclose(np.array(t) * [5, 10, 20, 40], t[0] * 5)
    with pytest.raises(ValueError):
        t_T_analytic(5, 0.1, 1.5)


def test_dist():
    assert dist(3.0, 3.0) == 0
    np.testing.assert_allclose(dist([0.0, 1.5], 3.0), [1.0, 0.5])


def test_meanfield_improves_with_j():
    cfg = CycleConfig(T_c=4.0, T_h=8.0, lambda_f=1.5)
    dev = {}
    for j in (10, 20, 40):
        t, mn, ma, run = meanfield_curve(replace(cfg, j=j), 8.0, 10.0)
        assert mn[0] == pytest.approx(run.m0, abs=1e-12)
        assert ma[0] == pytest.approx(run.m0, abs=1e-12)
        dev[j] = np.max(np.abs(mn - ma)) / j
    assert dev[40] < dev[20] < dev[10]


def test_module_function_matches_method():
    run = MeanFieldRun(3, 0.4, 0.1, 0.5)
    np.testing.assert_array_equal(meanfield.m_of_t(run, [0.0, 1.0]), run.m_of_t([0.0, 1.0]))
