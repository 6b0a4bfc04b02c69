"""Density-matrix utilities: Gibbs states, entropy, energy, fidelity, reference temperature."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

STATE_TOL = 1e-10

FINITE = "finite"
INFINITE_TEMPERATURE = "infinite-temperature"
ZERO_TEMPERATURE = "zero-temperature"


class InvalidStateError(ValueError):
    pass


def check_density_matrix(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidStateError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvalidStateError("density matrix has negative eigenvalues")
    return rho


def _check_hermitian(h: np.ndarray, what: str = "H", tol: float = 1e-10):
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol * max(1.0, np.max(np.abs(h), initial=0.0)):
        raise ValueError(f"{what} is not Hermitian")


def _probabilities(rho: np.ndarray) -> np.ndarray:
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if p.min(initial=0.0) < -STATE_TOL:
        raise InvalidStateError(f"eigenvalue {p.min():.3g} below -{STATE_TOL}")
    return np.clip(p, 0.0, None)


def _entropy_of(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    if w.min(initial=0.0) < -STATE_TOL:
        raise InvalidStateError(f"eigenvalue {w.min():.3g} below -{STATE_TOL}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def gibbs_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    """Boltzmann populations for the given spectrum (shifted by its minimum)."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def gibbs_state(h: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta H) / Tr exp(-beta H) via a Hermitian eigendecomposition."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    h = np.asarray(h)
    _check_hermitian(h)
    if np.count_nonzero(h - np.diag(np.diag(h))) == 0:
        return np.diag(gibbs_weights(np.diag(h).real, beta)).astype(complex)
    e, v = np.linalg.eigh(h)
    return (v * gibbs_weights(e, beta)) @ v.conj().T


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats."""
    return _entropy_of(_probabilities(np.asarray(rho)))


def mean_energy(rho: np.ndarray, h: np.ndarray) -> float:
    rho = np.asarray(rho)
    h = np.asarray(h)
    if rho.shape != h.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs H {h.shape}")
    e = np.einsum("ij,ji->", h, rho)
    if abs(e.imag) > 1e-10 * max(1.0, abs(e.real)):
        raise ValueError(f"Tr(H rho) has imaginary part {e.imag:.3g}")
    return float(e.real)


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2.

    Evaluated as the squared nuclear norm of sqrt(rho) @ sqrt(sigma), which is the
    same quantity but does not take square roots of the tiny eigenvalues of
    sqrt(rho) sigma sqrt(rho); this keeps 1 - F accurate down to ~1e-15.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    if _is_diagonal(rho) and _is_diagonal(sigma):
        p = np.clip(np.diag(rho).real, 0.0, None)
        q = np.clip(np.diag(sigma).real, 0.0, None)
        f = float(np.sum(np.sqrt(p * q)) ** 2)
    else:
        s = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(sigma), compute_uv=False)
        f = float(np.sum(s) ** 2)
    return min(max(f, 0.0), 1.0)


def _is_diagonal(a: np.ndarray) -> bool:
    return not np.any(a - np.diag(np.diag(a)))


@dataclass(frozen=True)
class ThermalQuery:
    beta_star: float
    status: str = FINITE

    @property
    def t_star(self) -> float:
        if self.status == INFINITE_TEMPERATURE:
            return math.inf
        if self.status == ZERO_TEMPERATURE:
            return 0.0
        return 1.0 / self.beta_star


class _EntropyCurve:
    """S(beta) of the Gibbs family of a fixed spectrum."""

    def __init__(self, energies: np.ndarray):
        e = np.sort(np.asarray(energies, dtype=float))
        self.e = e - e[0]
        scale = max(1.0, float(self.e[-1]))
        self.ground_degeneracy = int(np.count_nonzero(self.e <= 1e-10 * scale))
        self.s_max = math.log(len(e))
        self.s_min = math.log(self.ground_degeneracy)

    def __call__(self, beta: float) -> float:
        w = np.exp(-beta * self.e)
        z = w.sum()
        return float(beta * np.dot(w, self.e) / z + math.log(z))


def reference_temperature(rho: np.ndarray, h: np.ndarray, s_tol: float = 1e-12,
                          energies: np.ndarray | None = None) -> ThermalQuery:
    """Positive beta* whose Gibbs state of ``h`` has the same entropy as ``rho``.

    ``energies`` may carry a precomputed spectrum of ``h``.
    """
    h = np.asarray(h)
    _check_hermitian(h)
    if energies is None:
        energies = np.linalg.eigvalsh(h)
    return reference_temperature_from_entropy(entropy(rho), energies, s_tol)


def reference_temperature_from_entropy(s: float, energies: np.ndarray,
                                       s_tol: float = 1e-12) -> ThermalQuery:
    curve = _EntropyCurve(energies)
    if s >= curve.s_max - s_tol:
        return ThermalQuery(0.0, INFINITE_TEMPERATURE)
    if s <= curve.s_min + s_tol:
        return ThermalQuery(math.inf, ZERO_TEMPERATURE)

    lo, hi = 1e-8, 1.0
    if curve(lo) < s:
        lo = 0.0
    while curve(hi) >= s:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return ThermalQuery(math.inf, ZERO_TEMPERATURE)
    # S(beta) is strictly decreasing; plain bisection
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        s_mid = curve(mid)
        if abs(s_mid - s) < s_tol:
            return ThermalQuery(mid)
        if s_mid > s:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return ThermalQuery(0.5 * (lo + hi))


def pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
