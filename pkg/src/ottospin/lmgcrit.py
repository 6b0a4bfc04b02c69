"""Spectral diagnostics of the LMG stroke near its quantum critical point."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spinops
from .spinops import SpinBasis
from .unitary import DriveProtocol, hdot_at, lmg_hamiltonian


@dataclass(frozen=True)
class SpectrumSlice:
    lam: float
    gamma: float
    j: float
    energies: np.ndarray
    parity: np.ndarray
    vectors: np.ndarray
    ground_parity: int
    gap01: float
    first_excited: int


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(v), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)


def spectrum_at(lam: float, gamma: float, j: float, omega: float = 1.0) -> SpectrumSlice:
    """Eigen-decomposition of the LMG Hamiltonian with parity labels.

    psi_0 is the global ground state and psi_1 the lowest excited state sharing its
    parity; inside the symmetry-broken region the opposite-parity partner of the
    ground doublet is skipped.
    """
    basis = SpinBasis(j)
    h = lmg_hamiltonian(lam, gamma, basis, omega)
    e, v = np.linalg.eigh(h)
    v = _fix_phase(v)
    par = np.real(np.einsum("ij,i,ij->j", v.conj(), np.diag(spinops.parity(basis)).real, v))
    labels = np.where(par >= 0, 1, -1)
    if np.any(np.abs(np.abs(par) - 1) > 1e-8):
        # degenerate opposite-parity pairs can mix; split them by parity block
        labels, e, v = _by_parity_blocks(h, basis)
    p0 = int(labels[0])
    same = np.nonzero(labels[1:] == p0)[0]
    k1 = int(same[0] + 1) if len(same) else -1
    gap = float(e[k1] - e[0]) if k1 > 0 else math.nan
    return SpectrumSlice(lam, gamma, basis.j, e, labels, v, p0, gap, k1)


def _by_parity_blocks(h, basis):
    par = np.diag(spinops.parity(basis)).real
    parts = []
    for sign in (1, -1):
        idx = np.nonzero(par == sign)[0]
        if not len(idx):
            continue
        eb, vb = np.linalg.eigh(h[np.ix_(idx, idx)])
        full = np.zeros((basis.dim, len(idx)), dtype=complex)
        full[idx, :] = vb
        parts.append((eb, full, np.full(len(idx), sign)))
    e = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts], axis=1)
    lab = np.concatenate([p[2] for p in parts])
    order = np.argsort(e, kind="stable")
    return lab[order], e[order], _fix_phase(v[:, order])


def gamma_crit(lambda_i: float, lambda_f: float) -> float:
    if lambda_i <= 0 or lambda_f <= 0:
        raise ValueError("couplings must be positive")
    return 0.25 * (math.sqrt(lambda_i) + math.sqrt(lambda_f)) ** 2


def t_crit(lambda_i: float, lambda_f: float, t_u: float) -> float:
    """Time at which the parabola Gamma(t) touches the critical line Gamma = lambda."""
    return 0.5 * t_u * math.sqrt(lambda_i / gamma_crit(lambda_i, lambda_f))


@dataclass(frozen=True)
class CriticalElements:
    jz: float
    jx2: float
    hdot: float
    gap: float
    hdot_jz_term: float
    hdot_jx2_term: float

    @property
    def hdot_bound(self) -> float:
        return self.hdot_jz_term + self.hdot_jx2_term


def critical_matrix_elements(j, lambda_i, lambda_f, t_u, gamma_bar=None, omega=1.0) -> CriticalElements:
    """|<psi_1|O|psi_0>| for O = J_z, J_x^2, dH/dt at the point of closest approach.

    That point is t_crit for any gamma_bar (the maximum of Gamma/lambda does not
    depend on gamma_bar); gamma_bar defaults to the critical value.
    """
    if gamma_bar is None:
        gamma_bar = gamma_crit(lambda_i, lambda_f)
    protocol = DriveProtocol(lambda_i, lambda_f, gamma_bar, t_u, omega)
    t = t_crit(lambda_i, lambda_f, t_u)
    sl = spectrum_at(protocol.lam(t), protocol.gamma(t), j, omega)
    basis = SpinBasis(j)
    psi0 = sl.vectors[:, 0]
    psi1 = sl.vectors[:, sl.first_excited]

    def elem(op):
        return float(abs(psi1.conj() @ op @ psi0))

    jz_el = elem(spinops.jz(basis))
    jx2_el = elem(spinops.jx_squared(basis))
    s = t / t_u
    n = 2 * basis.j
    jz_coef = abs((lambda_f - lambda_i) / t_u * omega)
    jx2_coef = abs(4 * gamma_bar / n / t_u * (1 - 2 * s) * omega)
    return CriticalElements(jz_el, jx2_el, elem(hdot_at(protocol, t, basis)), sl.gap01,
                            jz_coef * jz_el, jx2_coef * jx2_el)


def adiabaticity_ratio(j, lambda_i, lambda_f, t_u, gamma_bar=None, omega=1.0,
                       combine: str = "terms") -> float:
    """Adiabaticity measure |<psi_1|dH/dt|psi_0>| / gap^2 at the critical time.

    At t_crit, d(Gamma/lambda)/dt = 0, so dH/dt is parallel to H there and the
    full matrix element vanishes identically. ``combine="terms"`` (default) adds
    the magnitudes of the J_z and J_x^2 contributions instead; ``"exact"``
    returns the literal (vanishing) matrix element ratio.
    """
    el = critical_matrix_elements(j, lambda_i, lambda_f, t_u, gamma_bar, omega)
    if not el.gap > 1e-14:
        raise ValueError(f"gap {el.gap:.3g} too small for a reliable ratio")
    if combine == "terms":
        num = el.hdot_bound
    elif combine == "exact":
        num = el.hdot
    else:
        raise ValueError(f"unknown combine mode {combine!r}")
    return num / el.gap ** 2


def loglog_slope(x, y) -> float:
    """Least-squares exponent of y ~ x**alpha."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
