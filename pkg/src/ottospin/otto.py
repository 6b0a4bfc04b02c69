"""Four-stroke Otto cycle, limit-cycle search and closed-form performance formulas.

Stroke numbering follows the usual convention: 1->2 unitary (lambda_i -> lambda_f),
2->3 hot bath, 3->4 unitary back, 4->1 cold bath. Heat entering the working
fluid is positive; extracted work is W' = -W.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import spinops
from .lindblad import (
    COLLECTIVE,
    INCOHERENT,
    BathSpec,
    EvolverSettings,
    Trajectory,
    evolve_lindblad,
    evolve_populations,
    thermalization_time,
)
from .spinops import SpinBasis
from .states import fidelity, gibbs_state, mean_energy, reference_temperature_from_entropy, entropy
from .unitary import DriveProtocol, evolve_unitary

log = logging.getLogger(__name__)

FULL = "full"


class LimitCycleNotReached(RuntimeError):
    pass


@dataclass(frozen=True)
class CycleConfig:
    """Parameters of one engine; ``t_th="full"`` means perfect thermalization."""

    j: float = 0.5
    lambda_i: float = 1.0
    lambda_f: float = 3.0
    T_c: float = 1.0
    T_h: float = 8.0
    gamma: float = 0.1
    omega: float = 1.0
    t_th: float | str = FULL
    t_u: float = 0.0
    gamma_bar: float = 0.0
    mode: str = COLLECTIVE
    thermal_tol: float = 1e-5
    limit_tol: float = 1e-10
    unitary_steps: int = 2000
    n_samples: int = 200
    trace_thermal: bool = True
    thermal_solver: str = "auto"
    unitary_scheme: str = "midpoint"

    def __post_init__(self):
        SpinBasis(self.j)
        if not self.lambda_i < self.lambda_f:
            raise ValueError(f"need lambda_i < lambda_f, got {self.lambda_i}, {self.lambda_f}")
        if not 0 < self.T_c < self.T_h:
            raise ValueError(f"need 0 < T_c < T_h, got {self.T_c}, {self.T_h}")
        if self.lambda_i <= 0:
            raise ValueError("lambda_i must be positive")
        if not (self.t_th == FULL or (isinstance(self.t_th, (int, float)) and self.t_th >= 0)):
            raise ValueError(f"t_th must be a non-negative number or {FULL!r}, got {self.t_th!r}")
        if self.t_u < 0:
            raise ValueError("t_u must be >= 0")
        if self.mode not in (COLLECTIVE, INCOHERENT):
            raise ValueError(f"unknown coupling mode {self.mode!r}")
        if self.mode == INCOHERENT and self.gamma_bar != 0:
            raise ValueError("incoherent ensembles are non-interacting; gamma_bar must be 0")
        if self.thermal_solver not in ("auto", "full", "populations"):
            raise ValueError(f"unknown thermal_solver {self.thermal_solver!r}")
        if self.unitary_scheme not in ("midpoint", "cf4"):
            raise ValueError(f"unknown unitary_scheme {self.unitary_scheme!r}")
        if not self.is_heat_engine_regime:
            warnings.warn("lambda_f/lambda_i >= T_h/T_c: no positive work can be extracted",
                          stacklevel=2)

    @property
    def full_thermalization(self) -> bool:
        return self.t_th == FULL

    @property
    def is_heat_engine_regime(self) -> bool:
        return self.lambda_f / self.lambda_i < self.T_h / self.T_c

    @property
    def n_qubits(self) -> int:
        return round(2 * self.j)

    @property
    def basis(self) -> SpinBasis:
        """Basis actually simulated (one qubit for incoherent ensembles)."""
        return SpinBasis(0.5 if self.mode == INCOHERENT else self.j)

    @property
    def extensive_factor(self) -> int:
        return self.n_qubits if self.mode == INCOHERENT else 1

    def hamiltonian(self, lam: float) -> np.ndarray:
        return -lam * self.omega * spinops.jz(self.basis)

    def protocol(self) -> DriveProtocol:
        return DriveProtocol(self.lambda_i, self.lambda_f, self.gamma_bar, self.t_u, self.omega)

    def seed_state(self) -> np.ndarray:
        return gibbs_state(self.hamiltonian(self.lambda_i), 1.0 / self.T_c)


@dataclass
class CycleRecord:
    Q_h: float
    Q_c: float
    W_12: float
    W_34: float
    W: float
    W_prime: float
    eta: float
    cycle_duration: float | None
    power: float | None
    rho1: np.ndarray = field(repr=False)
    rho2: np.ndarray = field(repr=False)
    rho3: np.ndarray = field(repr=False)
    rho4: np.ndarray = field(repr=False)
    rho1_end: np.ndarray = field(repr=False)
    stroke_id: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)
    t_star: np.ndarray = field(repr=False)
    entropy: np.ndarray = field(repr=False)
    stroke_durations: tuple = ()
    T_c_eff: float | None = None
    T_h_eff: float | None = None

    @property
    def first_law_residual(self) -> float:
        return abs(self.W + self.Q_h + self.Q_c)

    def stroke(self, k: int) -> dict:
        """Trajectory samples of stroke ``k`` (12, 23, 34 or 41)."""
        sel = self.stroke_id == k
        return {"t": self.t[sel], "energy": self.energy[sel], "t_star": self.t_star[sel],
                "entropy": self.entropy[sel]}

    def scalars(self) -> dict:
        return {
            "Q_h": self.Q_h, "Q_c": self.Q_c, "W": self.W, "W_prime": self.W_prime,
            "W_12": self.W_12, "W_34": self.W_34, "eta": self.eta,
            "cycle_duration": self.cycle_duration, "power": self.power,
            "T_c_eff": self.T_c_eff, "T_h_eff": self.T_h_eff,
        }


# ---------------------------------------------------------------- closed forms

def heats(rho1, rho2, rho3, rho4, h_i, h_f) -> tuple[float, float]:
    for r in (rho2, rho3):
        if np.shape(r) != np.shape(h_f):
            raise ValueError("dimension mismatch between states and H_f")
    for r in (rho1, rho4):
        if np.shape(r) != np.shape(h_i):
            raise ValueError("dimension mismatch between states and H_i")
    q_h = mean_energy(rho3, h_f) - mean_energy(rho2, h_f)
    q_c = mean_energy(rho1, h_i) - mean_energy(rho4, h_i)
    return q_h, q_c


def efficiency(lambda_i: float, lambda_f: float) -> float:
    if lambda_i > lambda_f:
        raise ValueError("need lambda_i <= lambda_f")
    return 1.0 - lambda_i / lambda_f


def carnot(T_c: float, T_h: float) -> float:
    return 1.0 - T_c / T_h


def pbar(lambda_i, lambda_f, T_c, T_h, omega=1.0, t_th=1.0) -> float:
    """Large-j saturation power of the collective engine (cycle time 2 t_th)."""
    if t_th <= 0:
        raise ValueError("t_th must be positive")
    a = math.exp(lambda_i * omega / T_c)
    b = math.exp(lambda_f * omega / T_h)
    return (lambda_f - lambda_i) * omega / (2 * t_th) * (a - b) / ((b - 1) * (a - 1))


def w_qubit(lambda_i, lambda_f, T_c, T_h, omega=1.0) -> float:
    """Work extracted per fully thermalized single-qubit cycle."""
    a = math.exp(lambda_i * omega / T_c)
    b = math.exp(lambda_f * omega / T_h)
    return (lambda_f - lambda_i) * omega * (a - b) / ((b + 1) * (a + 1))


def eta_ca(T_c: float, T_h: float) -> float:
    if not 0 < T_c <= T_h:
        raise ValueError("need 0 < T_c <= T_h")
    return 1.0 - math.sqrt(T_c / T_h)


def pbar_ca(T_c, T_h, omega=1.0, t_th=1.0) -> float:
    """Saturation power at the Curzon-Ahlborn couplings lambda = sqrt(T/omega)."""
    if not 0 < T_c < T_h:
        raise ValueError("need 0 < T_c < T_h")
    a = math.exp(math.sqrt(omega / T_c))
    b = math.exp(math.sqrt(omega / T_h))
    return (math.sqrt(T_h) - math.sqrt(T_c)) * math.sqrt(omega) / (2 * t_th) * (a - b) / ((b - 1) * (a - 1))


def relative_power(lambda_i, lambda_f, T_c, T_h, omega=1.0) -> float:
    """Collective-over-incoherent power ratio at the respective thermalization times."""
    return 1.0 / (math.tanh(lambda_f * omega / (2 * T_h)) * math.tanh(lambda_i * omega / (2 * T_c)))


def qubit_isochore_tstar(energy, lam, omega=1.0):
    """T* of a thermal qubit with mean energy ``energy`` at coupling ``lam``."""
    e = np.asarray(energy, dtype=float)
    return lam * omega / np.log((lam * omega - 2 * e) / (lam * omega + 2 * e))


def adiabat_tstar(energy, T_0, E_0):
    """Linear T*(E) through the reference point (E_0, T_0) of a non-interacting stroke."""
    return T_0 / E_0 * np.asarray(energy, dtype=float)


# ---------------------------------------------------------------- simulation

class _Recorder:
    def __init__(self):
        self.cols = {k: [] for k in ("stroke_id", "t", "energy", "t_star", "entropy")}
        self.clock = 0.0

    def add(self, stroke, traj, duration):
        n = len(traj.t)
        self.cols["stroke_id"].append(np.full(n, stroke))
        self.cols["t"].append(self.clock + np.asarray(traj.t))
        self.cols["energy"].append(np.asarray(traj.energy))
        self.cols["t_star"].append(np.asarray(traj.t_star))
        self.cols["entropy"].append(np.asarray(traj.entropy))
        self.clock += duration

    def arrays(self):
        return {k: (np.concatenate(v) if v else np.array([])) for k, v in self.cols.items()}


def _is_diagonal(rho):
    return not np.any(rho - np.diag(np.diag(rho)))


def _settings(config: CycleConfig) -> EvolverSettings:
    return EvolverSettings(n_samples=config.n_samples)


def _thermal_stroke(config: CycleConfig, rho, lam, T, record):
    bath = BathSpec(T, config.gamma, config.mode)
    basis = config.basis
    h = config.hamiltonian(lam)
    use_pops = config.thermal_solver == "populations" or (
        config.thermal_solver == "auto" and _is_diagonal(rho))
    if config.thermal_solver == "populations" and not _is_diagonal(rho):
        raise ValueError("population solver requires a state diagonal in the J_z basis")
    settings = _settings(config)

    if config.full_thermalization:
        gibbs = gibbs_state(h, 1.0 / T)
        if not (record and config.trace_thermal):
            return gibbs, None, None
        duration = thermalization_time(rho, lam, config.omega, bath, config.thermal_tol, basis=basis)
    else:
        duration = float(config.t_th)

    if use_pops:
        p, traj = evolve_populations(np.diag(rho).real, basis.j, bath, lam, config.omega,
                                     duration, settings, record=record)
        out = np.diag(p).astype(complex)
    else:
        out, traj = evolve_lindblad(rho, lam, config.omega, bath, duration, settings,
                                    basis=basis, record=record)
    if config.full_thermalization:
        out = gibbs
        if traj is not None:
            s = entropy(out)
            q = reference_temperature_from_entropy(s, np.diag(h).real)
            traj = Trajectory(np.append(traj.t, duration), np.append(traj.energy, mean_energy(out, h)),
                              np.append(traj.entropy, s), np.append(traj.t_star, q.t_star))
    return out, traj, duration


def _unitary_stroke(config: CycleConfig, rho, protocol: DriveProtocol, record):
    basis = config.basis
    if config.t_u == 0:
        # sudden switch between commuting endpoints: populations frozen; sample the
        # lambda ramp at fixed time so the adiabat is still drawn
        if not record:
            return np.array(rho, dtype=complex), None
        virtual = replace(protocol, gamma_bar=0.0, t_u=1.0)
        _, traj = evolve_unitary(rho, virtual, basis, steps=max(2, config.n_samples // 4),
                                 n_samples=config.n_samples // 4)
        traj.t = np.zeros_like(traj.t)
        return np.array(rho, dtype=complex), traj
    return evolve_unitary(rho, protocol, basis, steps=config.unitary_steps,
                          n_samples=config.n_samples, record=record, scheme=config.unitary_scheme)


def run_cycle(config: CycleConfig, rho_start=None, record: bool = True):
    """Run one cycle from ``rho_start`` (defaults to the cold Gibbs state).

    Returns ``(CycleRecord, rho_end)``; trajectory arrays are empty when ``record`` is False.
    """
    rho1 = config.seed_state() if rho_start is None else np.array(rho_start, dtype=complex)
    h_i = config.hamiltonian(config.lambda_i)
    h_f = config.hamiltonian(config.lambda_f)
    protocol = config.protocol()
    rec = _Recorder()

    rho2, tr12 = _unitary_stroke(config, rho1, protocol, record)
    if tr12 is not None:
        rec.add(12, tr12, config.t_u)
    rho3, tr23, d23 = _thermal_stroke(config, rho2, config.lambda_f, config.T_h, record)
    if tr23 is not None:
        rec.add(23, tr23, d23)
    rho4, tr34 = _unitary_stroke(config, rho3, protocol.reversed(), record)
    if tr34 is not None:
        rec.add(34, tr34, config.t_u)
    rho1_end, tr41, d41 = _thermal_stroke(config, rho4, config.lambda_i, config.T_c, record)
    if tr41 is not None:
        rec.add(41, tr41, d41)

    k = config.extensive_factor
    q_h, q_c = heats(rho1_end, rho2, rho3, rho4, h_i, h_f)
    w_12 = mean_energy(rho2, h_f) - mean_energy(rho1, h_i)
    w_34 = mean_energy(rho4, h_i) - mean_energy(rho3, h_f)
    q_h, q_c, w_12, w_34 = k * q_h, k * q_c, k * w_12, k * w_34
    w = w_12 + w_34
    w_prime = -w
    eta = w_prime / q_h if q_h != 0 else math.nan

    if config.full_thermalization:
        cycle_duration = (d23 + d41 + 2 * config.t_u) if (d23 is not None and d41 is not None) else None
    else:
        cycle_duration = 2 * config.t_th + 2 * config.t_u
    power = w_prime / cycle_duration if cycle_duration else None

    cols = rec.arrays()
    record_ = CycleRecord(q_h, q_c, w_12, w_34, w, w_prime, eta, cycle_duration, power,
                          rho1, rho2, rho3, rho4, rho1_end,
                          cols["stroke_id"], cols["t"], cols["energy"], cols["t_star"], cols["entropy"],
                          (config.t_u, d23, config.t_u, d41))
    if len(record_.t_star):
        finite = record_.t_star[np.isfinite(record_.t_star)]
        if len(finite):
            record_.T_c_eff = float(finite.min())
            record_.T_h_eff = float(finite.max())
    return record_, rho1_end


POLISH_TOL = 1e-13


def run_until_limit_cycle(config: CycleConfig, rho_seed=None, max_cycles: int = 10_000,
                          polish: bool = True):
    """Iterate cycles until successive start states agree to ``config.limit_tol`` in 1 - F.

    1 - F is quadratic in the distance between states, so 1e-10 only pins the
    state (and hence energies) to about 1e-5. With ``polish`` the iteration then
    continues until successive start states agree elementwise to POLISH_TOL (or stop
    contracting), so
    that heats and works of the recorded cycle close to near machine precision.

    Returns ``(CycleRecord of the converged cycle, cycles_taken)`` where
    ``cycles_taken`` counts cycles up to the fidelity criterion.
    """
    if max_cycles < 1:
        raise ValueError("max_cycles must be >= 1")
    rho = config.seed_state() if rho_seed is None else np.array(rho_seed, dtype=complex)
    for k in range(1, max_cycles + 1):
        _, rho_next = run_cycle(config, rho, record=False)
        infid = 1.0 - fidelity(rho, rho_next)
        rho = rho_next
        if infid <= config.limit_tol:
            break
    else:
        raise LimitCycleNotReached(f"no limit cycle within {max_cycles} cycles (last 1-F={infid:.3g})")
    if polish:
        last = math.inf
        for _ in range(max_cycles - k):
            _, rho_next = run_cycle(config, rho, record=False)
            moved = float(np.max(np.abs(rho_next - rho)))
            rho = rho_next
            # stop at the tolerance or once rounding noise stops the contraction
            if moved <= POLISH_TOL or moved >= last:
                break
            last = moved
    record, _ = run_cycle(config, rho, record=True)
    log.debug("limit cycle after %d cycles (1-F=%.3g)", k, infid)
    return record, k
