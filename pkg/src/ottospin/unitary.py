"""LMG driving protocol and unitary propagation of the working fluid."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import spinops
from .spinops import SpinBasis
from .states import entropy, mean_energy, reference_temperature_from_entropy

FORWARD = "forward"
REVERSE = "reverse"


@dataclass(frozen=True)
class DriveProtocol:
    lambda_i: float
    lambda_f: float
    gamma_bar: float = 0.0
    t_u: float = 0.0
    omega: float = 1.0
    direction: str = FORWARD

    def __post_init__(self):
        if self.t_u < 0:
            raise ValueError("t_u must be >= 0")
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"direction must be {FORWARD!r} or {REVERSE!r}")

    def reversed(self) -> "DriveProtocol":
        return replace(self, direction=REVERSE if self.direction == FORWARD else FORWARD)

    @property
    def endpoints(self) -> tuple[float, float]:
        """(start, end) values of lambda for this direction."""
        if self.direction == FORWARD:
            return self.lambda_i, self.lambda_f
        return self.lambda_f, self.lambda_i

    def ramp(self, t: float) -> float:
        if self.t_u == 0:
            if t != 0:
                raise ValueError("t must be 0 for an instantaneous stroke")
            return 0.0
        if t < -1e-12 * self.t_u or t > self.t_u * (1 + 1e-12):
            raise ValueError(f"t={t} outside [0, t_u={self.t_u}]")
        return min(max(t / self.t_u, 0.0), 1.0)

    def lam(self, t: float) -> float:
        a, b = self.endpoints
        s = self.ramp(t)
        return a * (1 - s) + b * s

    def gamma(self, t: float) -> float:
        s = self.ramp(t)
        return 4 * self.gamma_bar * s * (1 - s)


def lmg_hamiltonian(lam: float, gamma: float, basis: SpinBasis, omega: float = 1.0) -> np.ndarray:
    """-lam*omega*J_z - (gamma*omega/N) J_x^2 with N = 2j."""
    h = -lam * omega * spinops.jz(basis)
    if gamma != 0 and basis.j > 0:
        h = h - (gamma * omega / (2 * basis.j)) * spinops.jx_squared(basis)
    return h


def hamiltonian_at(protocol: DriveProtocol, t: float, basis: SpinBasis) -> np.ndarray:
    return lmg_hamiltonian(protocol.lam(t), protocol.gamma(t), basis, protocol.omega)


def hdot_at(protocol: DriveProtocol, t: float, basis: SpinBasis) -> np.ndarray:
    if protocol.t_u == 0:
        raise ValueError("dH/dt is undefined for an instantaneous stroke")
    a, b = protocol.endpoints
    t_u = protocol.t_u
    s = protocol.ramp(t)
    hd = -((b - a) / t_u) * protocol.omega * spinops.jz(basis)
    if protocol.gamma_bar != 0 and basis.j > 0:
        n = 2 * basis.j
        hd = hd - (4 * protocol.gamma_bar / n) * (1 / t_u) * (1 - 2 * s) * protocol.omega * spinops.jx_squared(basis)
    return hd


@dataclass
class UnitaryTrajectory:
    t: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    t_star: np.ndarray
    parity: np.ndarray
    spectrum_drift: float = 0.0


def _propagator(h: np.ndarray, dt: float) -> np.ndarray:
    e, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * e * dt)) @ v.conj().T


_CF4_C = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF4_A = (0.25 - math.sqrt(3) / 6, 0.25 + math.sqrt(3) / 6)
MIDPOINT = "midpoint"
CF4 = "cf4"


def _step_unitary(protocol, basis, t, dt, scheme):
    if scheme == MIDPOINT:
        return _propagator(hamiltonian_at(protocol, t + 0.5 * dt, basis), dt)
    h1 = hamiltonian_at(protocol, min(t + _CF4_C[0] * dt, protocol.t_u), basis)
    h2 = hamiltonian_at(protocol, min(t + _CF4_C[1] * dt, protocol.t_u), basis)
    late = _propagator(_CF4_A[0] * h1 + _CF4_A[1] * h2, dt)
    early = _propagator(_CF4_A[1] * h1 + _CF4_A[0] * h2, dt)
    return late @ early


def _lambda_integral(protocol: DriveProtocol, t: float) -> float:
    a, b = protocol.endpoints
    return a * t + (b - a) * t * t / (2 * protocol.t_u)


def evolve_unitary(rho0, protocol: DriveProtocol, basis: SpinBasis | None = None,
                   steps: int = 2000, n_samples: int = 200, record: bool = True,
                   scheme: str = MIDPOINT):
    """Propagate rho through one unitary stroke.

    The default scheme applies exp(-i H(t_k + dt/2) dt) per step (second order).
    ``scheme="cf4"`` uses the two-exponential commutator-free fourth-order Magnus
    integrator at the Gauss points, useful for step-size audits.
    Returns ``(rho_final, trajectory)``.
    """
    if scheme not in (MIDPOINT, CF4):
        raise ValueError(f"unknown scheme {scheme!r}")
    rho = np.array(rho0, dtype=complex)
    if basis is None:
        basis = SpinBasis((rho.shape[0] - 1) / 2)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(f"state shape {rho.shape} does not match basis dim {basis.dim}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    par = spinops.parity(basis)
    p0 = np.sort(np.linalg.eigvalsh(rho))

    # drive without interaction commutes with itself: populations never move and
    # coherences only pick up the exact phase exp(i omega Lambda(t) (m - m'))
    commuting = protocol.gamma_bar == 0 or basis.j == 0
    if protocol.t_u == 0:
        steps = 0
    stride = max(1, int(math.ceil(steps / max(1, n_samples)))) if steps else 1
    if steps:
        steps = stride * int(math.ceil(steps / stride))
    dt = protocol.t_u / steps if steps else 0.0

    rows, times = [], []

    def sample(t, rho):
        h = hamiltonian_at(protocol, t, basis)
        s = entropy(rho)
        q = reference_temperature_from_entropy(s, np.linalg.eigvalsh(h))
        times.append(t)
        rows.append((mean_energy(rho, h), s, q.t_star, float(np.real(np.einsum("ij,ji->", par, rho)))))

    if record:
        sample(0.0, rho)
    for k in range(steps):
        if not commuting:
            u = _step_unitary(protocol, basis, k * dt, dt, scheme)
            rho = u @ rho @ u.conj().T
            rho = 0.5 * (rho + rho.conj().T)
        if record and (k + 1) % stride == 0:
            sample((k + 1) * dt, rho)

    if commuting and steps:
        phase = np.exp(1j * protocol.omega * _lambda_integral(protocol, protocol.t_u) * basis.m_values)
        rho = phase[:, None] * rho * phase.conj()[None, :]

    drift = float(np.max(np.abs(np.sort(np.linalg.eigvalsh(rho)) - p0)))
    traj = None
    if record:
        e, s, ts, pa = (np.array(c) for c in zip(*rows))
        traj = UnitaryTrajectory(np.array(times), e, s, ts, pa, drift)
    return rho, traj


def stroke_work(rho_before, rho_after, h_before, h_after) -> float:
    return mean_energy(rho_after, h_after) - mean_energy(rho_before, h_before)
