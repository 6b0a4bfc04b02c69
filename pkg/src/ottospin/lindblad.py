"""Thermalization strokes: collective Lindblad dynamics and the population fast path.

The bath couples through J_+ (emission towards m = +j, the ground state of
H = -lambda*omega*J_z) with rate gamma*(1 + n_b) and through J_- with rate
gamma*n_b. Integration is classical fixed-step RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spinops
from .spinops import SpinBasis
from .states import (
    ThermalQuery,
    entropy,
    fidelity,
    gibbs_weights,
    mean_energy,
    reference_temperature_from_entropy,
    _entropy_of,
)

COLLECTIVE = "collective"
INCOHERENT = "incoherent"
_MODES = (COLLECTIVE, INCOHERENT)

# RK4 step size as a fraction of the fastest decay/oscillation time scale
STIFFNESS_FRACTION = 0.05


class IntegratorError(RuntimeError):
    pass


class NotThermalizedError(RuntimeError):
    pass


@dataclass(frozen=True)
class BathSpec:
    temperature: float
    gamma: float
    mode: str = COLLECTIVE

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"bath temperature must be > 0, got {self.temperature}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.mode not in _MODES:
            raise ValueError(f"unknown coupling mode {self.mode!r}; expected one of {_MODES}")

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature


@dataclass(frozen=True)
class EvolverSettings:
    """``dt=None`` picks a step from the stiffness of the generator."""

    dt: float | None = None
    sample_every: int | None = None
    n_samples: int = 200
    max_time: float = 1e4
    min_steps: int = 1000
    audit: bool = False
    audit_tol: float = 1e-9

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class Trajectory:
    t: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    t_star: np.ndarray
    fidelity: np.ndarray = field(default=None)
    trace_drift: float = 0.0
    min_eigenvalue: float = 0.0

    def __len__(self):
        return len(self.t)


def bose_factor(beta: float, lam: float, omega: float = 1.0) -> float:
    x = beta * lam * omega
    if not x > 0:
        raise ValueError(f"beta*lambda*omega must be positive, got {x}")
    if x > 700:  # expm1 overflows; n_b = e^{-x} to double precision
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def _basis_for(dim: int) -> SpinBasis:
    return SpinBasis((dim - 1) / 2)


def _check_mode(basis: SpinBasis, bath: BathSpec):
    if bath.mode == INCOHERENT and basis.dim != 2:
        raise ValueError("incoherent coupling is simulated on a single qubit (dim 2); "
                         f"got dim {basis.dim}")


def lindblad_rhs(rho, lam, omega, bath: BathSpec, basis: SpinBasis | None = None) -> np.ndarray:
    rho = np.asarray(rho)
    if basis is None:
        basis = _basis_for(rho.shape[0])
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(f"state shape {rho.shape} does not match basis dim {basis.dim}")
    _check_mode(basis, bath)
    return _Generator(basis, lam, omega, bath)(rho)


class _Generator:
    """Precomputed pieces of the Lindblad generator for one stroke."""

    def __init__(self, basis: SpinBasis, lam, omega, bath: BathSpec):
        self.basis = basis
        n_b = bose_factor(bath.beta, lam, omega)
        self.n_b = n_b
        self.down = bath.gamma * (1.0 + n_b)
        self.up = bath.gamma * n_b
        self.jz = spinops.jz(basis)
        self.jp = spinops.jplus(basis)
        self.jm = spinops.jminus(basis)
        self.h = -lam * omega * self.jz
        m = basis.m_values
        j = basis.j
        # J_- J_+ and J_+ J_- are diagonal in the J_z basis
        jmjp = j * (j + 1) - m * (m + 1)
        jpjm = j * (j + 1) - m * (m - 1)
        self.anti = self.down * jmjp + self.up * jpjm
        self.energies = -lam * omega * m
        # i*lam*omega*[J_z, rho] -> elementwise phase i*lam*omega*(m_a - m_b)
        self.coh = 1j * lam * omega * (m[:, None] - m[None, :]) - 0.5 * (self.anti[:, None] + self.anti[None, :])
        self.max_rate = float(max(np.max(self.anti, initial=0.0), 2 * basis.j * abs(lam * omega), 1e-300))

    def __call__(self, rho):
        return (self.coh * rho
                + self.down * (self.jp @ rho @ self.jm)
                + self.up * (self.jm @ rho @ self.jp))


def _rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_plan(duration, max_rate, settings: EvolverSettings):
    """Return ``(n_steps, dt, stride)`` with n_steps a multiple of the sampling stride."""
    if duration <= 0:
        return 0, 0.0, 1
    dt = settings.dt
    if dt is None:
        dt = min(duration / settings.min_steps, STIFFNESS_FRACTION / max_rate)
    n = max(1, int(math.ceil(duration / dt - 1e-9)))
    if settings.sample_every is not None:
        stride = max(1, settings.sample_every)
    else:
        stride = max(1, int(math.ceil(n / max(1, settings.n_samples))))
    n = stride * int(math.ceil(n / stride))
    return n, duration / n, stride


def _sample(rho, energies, h):
    s = entropy(rho)
    q = reference_temperature_from_entropy(s, energies)
    ref = _reference_state(q, energies, h)
    return mean_energy(rho, h), s, q.t_star, fidelity(rho, ref)


def _reference_state(q: ThermalQuery, energies, h):
    # all Hamiltonians in this module are diagonal: -lam*omega*J_z
    if q.status == "infinite-temperature":
        w = np.full(len(energies), 1.0 / len(energies))
    elif q.status == "zero-temperature":
        e = energies - energies.min()
        w = (e <= 1e-10 * max(1.0, e.max())).astype(float)
        w /= w.sum()
    else:
        w = gibbs_weights(energies, q.beta_star)
    return np.diag(w).astype(complex)


def evolve_lindblad(rho0, lam, omega, bath: BathSpec, t_th: float,
                    settings: EvolverSettings = EvolverSettings(),
                    basis: SpinBasis | None = None, record: bool = True):
    """Integrate the collective Lindblad equation for a duration ``t_th``.

    Returns ``(rho_final, trajectory)``; ``trajectory`` is None when ``record`` is False.
    """
    rho = np.array(rho0, dtype=complex)
    if basis is None:
        basis = _basis_for(rho.shape[0])
    _check_mode(basis, bath)
    if t_th < 0:
        raise ValueError("t_th must be >= 0")
    gen = _Generator(basis, lam, omega, bath)
    n, dt, stride = _step_plan(t_th, gen.max_rate, settings)
    tr0 = np.trace(rho).real

    samples = []
    times = []
    drift = 0.0
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if record:
        samples.append(_sample(rho, gen.energies, gen.h))
        times.append(0.0)
    for k in range(1, n + 1):
        rho = _rk4_step(gen, rho, dt)
        rho = 0.5 * (rho + rho.conj().T)
        if k % stride == 0:
            drift = max(drift, abs(np.trace(rho).real - tr0))
            if drift > 1e-6:
                raise IntegratorError(f"trace drift {drift:.3g} at t={k * dt:.6g} "
                                      f"(lambda={lam}, T={bath.temperature}, dt={dt:.3g})")
            if record:
                min_eig = min(min_eig, float(np.linalg.eigvalsh(rho).min()))
                samples.append(_sample(rho, gen.energies, gen.h))
                times.append(k * dt)

    if settings.audit and n > 0:
        fine = EvolverSettings(dt=dt / 2, min_steps=1)
        rho_fine, _ = evolve_lindblad(rho0, lam, omega, bath, t_th, fine, basis, record=False)
        moved = max(abs(mean_energy(rho_fine, gen.h) - mean_energy(rho, gen.h)),
                    abs(entropy(rho_fine) - entropy(rho)))
        if moved > settings.audit_tol:
            raise IntegratorError(f"step-halving audit moved observables by {moved:.3g}")

    traj = None
    if record:
        e, s, ts, f = (np.array(c) for c in zip(*samples))
        traj = Trajectory(np.array(times), e, s, ts, f, drift, min_eig)
    return rho, traj


# ---------------------------------------------------------------- populations

def rate_matrix(j, bath: BathSpec, lam, omega) -> np.ndarray:
    """Generator A of dp/dt = A p for the J_z populations (ascending m)."""
    basis = SpinBasis(j)
    m = basis.m_values
    j = basis.j
    n_b = bose_factor(bath.beta, lam, omega)
    down = bath.gamma * (1 + n_b)
    up = bath.gamma * n_b
    a = np.zeros((basis.dim, basis.dim))
    idx = np.arange(basis.dim)
    # gain of rho_m from rho_{m-1} and rho_{m+1}
    a[idx[1:], idx[:-1]] = down * (j + m[1:]) * (j - m[1:] + 1)
    a[idx[:-1], idx[1:]] = up * (j - m[:-1]) * (j + m[:-1] + 1)
    a[idx, idx] = -down * (j * (j + 1) - m * (m + 1)) - up * (j * (j + 1) - m * (m - 1))
    return a


def diagonal_rates_rhs(p, j, bath: BathSpec, lam, omega) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.min(initial=0.0) < -1e-12:
        raise ValueError(f"negative population {p.min():.3g}")
    return rate_matrix(j, bath, lam, omega) @ p


def _rk4_transfer(a: np.ndarray, dt: float) -> np.ndarray:
    # one classical RK4 step of the linear system dp/dt = A p, as a matrix
    x = dt * a
    eye = np.eye(len(a))
    x2 = x @ x
    return eye + x + x2 / 2 + x2 @ x / 6 + x2 @ x2 / 24


def evolve_populations(p0, j, bath: BathSpec, lam, omega, t_th: float,
                       settings: EvolverSettings = EvolverSettings(), record: bool = True):
    """RK4 integration of the population rate equations; returns ``(p_final, trajectory)``."""
    p = np.array(p0, dtype=float)
    a = rate_matrix(j, bath, lam, omega)
    basis = SpinBasis(j)
    energies = -lam * omega * basis.m_values
    max_rate = max(float(np.max(-np.diag(a), initial=0.0)), 1e-300)
    n, dt, stride = _step_plan(t_th, max_rate, settings)
    m_step = _rk4_transfer(a, dt) if n else np.eye(len(p))
    m_stride = np.linalg.matrix_power(m_step, stride)

    times, rows = [], []

    def sample(t, p):
        s = _entropy_of(np.clip(p, 0.0, None))
        q = reference_temperature_from_entropy(s, energies)
        ref = np.diag(_reference_state(q, energies, None)).real
        f = min(1.0, float(np.sum(np.sqrt(np.clip(p, 0, None) * ref)) ** 2))
        times.append(t)
        rows.append((float(energies @ p), s, q.t_star, f))

    if record:
        sample(0.0, p)
    for k in range(stride, n + 1, stride):
        p = m_stride @ p
        if record:
            sample(k * dt, p)

    drift = abs(p.sum() - np.sum(p0))
    if drift > 1e-6:
        raise IntegratorError(f"population drift {drift:.3g}")

    if settings.audit and n > 0:
        fine, _ = evolve_populations(p0, j, bath, lam, omega, t_th,
                                     EvolverSettings(dt=dt / 2, min_steps=1), record=False)
        moved = max(abs(energies @ (fine - p)), abs(_entropy_of(np.clip(fine, 0, None)) - _entropy_of(np.clip(p, 0, None))))
        if moved > settings.audit_tol:
            raise IntegratorError(f"step-halving audit moved observables by {moved:.3g}")

    traj = None
    if record:
        e, s, ts, f = (np.array(c) for c in zip(*rows))
        traj = Trajectory(np.array(times), e, s, ts, f, drift, float(p.min()))
    return p, traj


# ---------------------------------------------------------------- diagnostics

def thermalization_time(rho0, lam, omega, bath: BathSpec, tol: float = 1e-5,
                        settings: EvolverSettings = EvolverSettings(max_time=1e4),
                        basis: SpinBasis | None = None) -> float:
    """First time at which 1 - F(rho(t), Gibbs(bath)) <= tol, resolved to one RK4 step.

    Diagonal initial states are propagated with the population equations.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    rho0 = np.asarray(rho0)
    if basis is None:
        basis = _basis_for(rho0.shape[0])
    _check_mode(basis, bath)
    target_w = gibbs_weights(-lam * omega * basis.m_values, bath.beta)
    target = np.diag(target_w).astype(complex)
    if 1 - fidelity(rho0, target) <= tol:
        return 0.0

    diagonal = not np.any(rho0 - np.diag(np.diag(rho0)))
    if diagonal:
        a = rate_matrix(basis.j, bath, lam, omega)
        max_rate = max(float(np.max(-np.diag(a))), 1e-300)
        y = np.diag(rho0).real.copy()

        def infid(p):
            return 1 - min(1.0, float(np.sum(np.sqrt(np.clip(p, 0, None) * target_w)) ** 2))
    else:
        gen = _Generator(basis, lam, omega, bath)
        max_rate = gen.max_rate
        y = np.array(rho0, dtype=complex)

        def infid(r):
            return 1 - fidelity(r, target)

    dt = settings.dt or STIFFNESS_FRACTION / max_rate
    if diagonal:
        transfer = _rk4_transfer(a, dt)

        def step(p):
            return transfer @ p
        stride = 1
    else:
        def step(r):
            r = _rk4_step(gen, r, dt)
            return 0.5 * (r + r.conj().T)
        stride = max(1, settings.sample_every or 20)

    t = 0.0
    while t < settings.max_time:
        prev = y
        for _ in range(stride):
            y = step(y)
        t_next = t + stride * dt
        if infid(y) <= tol:
            # refine inside the last stride one step at a time
            y = prev
            for k in range(1, stride + 1):
                y = step(y)
                if infid(y) <= tol:
                    return t + k * dt
            return t_next
        t = t_next
    raise NotThermalizedError(f"1-F > {tol} after max_time={settings.max_time} "
                              f"(lambda={lam}, T={bath.temperature}, gamma={bath.gamma})")


def spohn_diagnostic(trajectory: Trajectory, bath: BathSpec) -> np.ndarray:
    """Entropy production sigma(t) = dS/dt - beta * dQ/dt along a fixed-H stroke.

    The derivative is taken of S - beta*E as one series, so a monotone series
    gives a non-negative central difference.
    """
    t = np.asarray(trajectory.t)
    if len(t) < 2:
        return np.zeros(len(t))
    f = np.asarray(trajectory.entropy) - bath.beta * np.asarray(trajectory.energy)
    return np.gradient(f, t, edge_order=1)
