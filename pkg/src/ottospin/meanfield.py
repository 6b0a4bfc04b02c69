"""Mean-field description of superradiant thermalization of <J_z>.

With <J_z^2> ~ <J_z>^2 the collective dissipator gives the Riccati equation
dm/dt = -gamma (1 + 2 n_b) m - gamma m^2 + gamma j (j + 1), solved by a
shifted tanh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spinops import SpinBasis
from .states import gibbs_weights


def amplitude(j: float, n_b: float) -> float:
    return 0.5 * math.sqrt(4 * j * (j + 1) + (1 + 2 * n_b) ** 2)


def m0_thermal(j: float, beta: float, lam: float, omega: float = 1.0) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    m = SpinBasis(j).m_values
    return float(m @ gibbs_weights(-lam * omega * m, beta))


def superrad_rhs(m: float, j: float, n_b: float, gamma: float) -> float:
    return -gamma * (1 + 2 * n_b) * m - gamma * m * m + gamma * j * (j + 1)


def t_tilde_from_m0(j: float, n_b: float, gamma: float, m0: float) -> float:
    c = amplitude(j, n_b)
    arg = (-1 + 2 * c - 2 * m0 - 2 * n_b) / (1 + 2 * c + 2 * m0 + 2 * n_b)
    if not arg > 0:
        raise ValueError(f"m0={m0} lies outside the tanh solution branch (log argument {arg:.3g})")
    return math.log(arg) / (2 * c * gamma)


def m_steady(j: float, n_b: float) -> float:
    return amplitude(j, n_b) - 0.5 * (1 + 2 * n_b)


def dist(m, m_ss: float):
    return np.abs(m_ss - np.asarray(m)) / m_ss


def t_T_analytic(j: float, gamma: float, eps: float) -> float:
    """Large-j thermalization time from 1 - tanh(j gamma t_T) = eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return math.atanh(1 - eps) / (j * gamma)


@dataclass(frozen=True)
class MeanFieldRun:
    j: float
    n_b: float
    gamma: float
    m0: float

    @property
    def C(self) -> float:
        return amplitude(self.j, self.n_b)

    @property
    def t_tilde(self) -> float:
        return t_tilde_from_m0(self.j, self.n_b, self.gamma, self.m0)

    @property
    def m_ss(self) -> float:
        return m_steady(self.j, self.n_b)

    def m_of_t(self, t):
        return m_of_t(self, t)


def m_of_t(run: MeanFieldRun, t):
    c = run.C
    return -0.5 * (1 + 2 * run.n_b) + c * np.tanh(c * run.gamma * (np.asarray(t) - run.t_tilde))
