"""Figure-level experiment presets.

Each preset turns a base :class:`CycleConfig` (plus optional sweep axes) into a
set of named tables and a dict of summary scalars. Heavy independent points go
through the ``pmap`` callable so the CLI can run them on a worker pool.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import lindblad, lmgcrit, meanfield, otto
from .lindblad import BathSpec, EvolverSettings, evolve_lindblad, thermalization_time
from .otto import CycleConfig
from .spinops import SpinBasis
from .states import gibbs_state, gibbs_weights

TRAJECTORY_COLUMNS = ("stroke_id", "t", "mean_energy", "t_star", "entropy")

# initial bath-free temperatures for the relaxation studies
TT_INITIAL_TEMPERATURE = 4.0
MF_INITIAL_TEMPERATURE = 8.0
MF_T_MAX = 10.0
# T* above T_h by more than this relative margin counts as an overshoot
OVERSHOOT_RTOL = 1e-6


@dataclass
class Table:
    columns: tuple
    rows: list
    description: str = ""


@dataclass
class Result:
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    base: dict
    axes: dict
    run: Callable
    point: Callable
    point_columns: tuple


def _serial_map(fn, items):
    return [fn(x) for x in items]


def trajectory_table(record: otto.CycleRecord, description="") -> Table:
    rows = list(zip(record.stroke_id.tolist(), record.t.tolist(), record.energy.tolist(),
                    record.t_star.tolist(), record.entropy.tolist()))
    return Table(TRAJECTORY_COLUMNS, rows, description)


def _guard(fn, *args):
    """Run one sweep point; numerical failures become a status string."""
    try:
        return fn(*args), "ok"
    except (lindblad.IntegratorError, lindblad.NotThermalizedError, otto.LimitCycleNotReached,
            ValueError, FloatingPointError) as exc:
        return None, f"error: {type(exc).__name__}: {exc}"


def loglog_fit(x, y):
    return lmgcrit.loglog_slope(x, y)


# ---------------------------------------------------------------- point functions

def limit_cycle_point(config: CycleConfig) -> dict:
    rec, k = otto.run_until_limit_cycle(replace(config, n_samples=20), max_cycles=10_000)
    return {"W_prime": rec.W_prime, "power": rec.power, "eta": rec.eta, "Q_h": rec.Q_h,
            "Q_c": rec.Q_c, "cycles": k, "T_c_eff": rec.T_c_eff, "T_h_eff": rec.T_h_eff}


def full_cycle_point(config: CycleConfig) -> dict:
    cfg = replace(config, t_th=otto.FULL, trace_thermal=False, n_samples=40)
    rec, _ = otto.run_cycle(cfg, record=True)
    s12 = rec.stroke(12)["t_star"]
    return {"W_prime": rec.W_prime, "Q_h": rec.Q_h, "Q_c": rec.Q_c, "eta": rec.eta,
            "min_t_star_12": float(np.min(s12)) if len(s12) else math.nan}


def cycle_point(config: CycleConfig) -> dict:
    if config.full_thermalization:
        return full_cycle_point(config)
    return limit_cycle_point(config)


def t_T_point(config: CycleConfig, T_i: float) -> dict:
    basis = SpinBasis(config.j)
    h = -config.lambda_i * config.omega * np.diag(basis.m_values)
    rho0 = gibbs_state(h.astype(complex), 1.0 / T_i)
    bath = BathSpec(config.T_c, config.gamma, config.mode)
    return {"t_T": thermalization_time(rho0, config.lambda_i, config.omega, bath, config.thermal_tol)}


def meanfield_curve(config: CycleConfig, T_i: float, t_max: float, n: int = 400):
    """Numeric <J_z>(t) from the population equations against the mean-field tanh."""
    j = config.j
    lam, omega = config.lambda_i, config.omega
    basis = SpinBasis(j)
    bath = BathSpec(config.T_c, config.gamma)
    n_b = lindblad.bose_factor(bath.beta, lam, omega)
    m0 = meanfield.m0_thermal(j, 1.0 / T_i, lam, omega)
    run = meanfield.MeanFieldRun(j, n_b, config.gamma, m0)
    p0 = gibbs_weights(-lam * omega * basis.m_values, 1.0 / T_i)
    a = lindblad.rate_matrix(j, bath, lam, omega)
    dt = min(t_max / n, lindblad.STIFFNESS_FRACTION / float(np.max(-np.diag(a))))
    steps_per = max(1, int(math.ceil(t_max / n / dt)))
    dt = t_max / n / steps_per
    step = np.linalg.matrix_power(lindblad._rk4_transfer(a, dt), steps_per)
    t = np.linspace(0.0, t_max, n + 1)
    m_num = np.empty(n + 1)
    p = p0.copy()
    for k in range(n + 1):
        if k:
            p = step @ p
        m_num[k] = basis.m_values @ p
    return t, m_num, np.asarray(run.m_of_t(t)), run


# ---------------------------------------------------------------- presets

def run_qubit_cycle(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    cfg = replace(config, t_th=otto.FULL, trace_thermal=True)
    rec, _ = otto.run_cycle(cfg)
    h_i = cfg.hamiltonian(cfg.lambda_i)
    h_f = cfg.hamiltonian(cfg.lambda_f)
    e1 = otto.mean_energy(rec.rho1, h_i)
    e3 = otto.mean_energy(rec.rho3, h_f)
    analytic = []
    dev = 0.0
    for sid, e, ts in zip(rec.stroke_id, rec.energy, rec.t_star):
        if sid == 12:
            ref = otto.adiabat_tstar(e, cfg.T_c, e1)
        elif sid == 34:
            ref = otto.adiabat_tstar(e, cfg.T_h, e3)
        else:
            ref = otto.qubit_isochore_tstar(e, cfg.lambda_f if sid == 23 else cfg.lambda_i, cfg.omega)
        ref = float(ref)
        analytic.append((int(sid), float(e), ref))
        if math.isfinite(ref) and math.isfinite(ts):
            dev = max(dev, abs(ref - ts))
    res = Result()
    res.tables["trajectory"] = trajectory_table(rec, "full-thermalization cycle")
    res.tables["analytic"] = Table(("stroke_id", "mean_energy", "t_star_analytic"), analytic,
                                   "linear adiabats and thermal isochores evaluated at the simulated energies")
    res.summary = {**rec.scalars(), "E_1": e1, "E_3": e3, "max_analytic_deviation": dev,
                   "W_prime_closed_form": otto.w_qubit(cfg.lambda_i, cfg.lambda_f, cfg.T_c, cfg.T_h, cfg.omega),
                   "eta_formula": otto.efficiency(cfg.lambda_i, cfg.lambda_f),
                   "eta_carnot": otto.carnot(cfg.T_c, cfg.T_h)}
    return res


def run_qubit_limit_cycle(config: CycleConfig, axes: dict, pmap=_serial_map, show_cycles: int = 8) -> Result:
    res = Result()
    rho = config.seed_state()
    for k in range(1, show_cycles + 1):
        rec, rho = otto.run_cycle(config, rho)
        res.tables[f"cycle_{k:02d}"] = trajectory_table(rec, f"transient cycle {k}")
    limit, k = otto.run_until_limit_cycle(config)
    full, _ = otto.run_cycle(replace(config, t_th=otto.FULL))
    res.tables["limit_cycle"] = trajectory_table(limit, "converged limit cycle")
    res.tables["full_cycle"] = trajectory_table(full, "fully thermalized reference cycle")
    res.summary = {**limit.scalars(), "cycles_to_limit": k,
                   "eta_formula": otto.efficiency(config.lambda_i, config.lambda_f)}
    return res


def run_collective_cycle(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    res = Result()
    full, _ = otto.run_cycle(replace(config, t_th=otto.FULL, trace_thermal=True))
    res.tables["full_cycle"] = trajectory_table(full, "full-thermalization cycle")
    # distance to the reference thermal state along the hot stroke
    bath = BathSpec(config.T_h, config.gamma)
    duration = full.stroke_durations[1]
    _, traj = evolve_lindblad(full.rho2, config.lambda_f, config.omega, bath, duration,
                              EvolverSettings(n_samples=config.n_samples))
    res.tables["fidelity_23"] = Table(("t", "one_minus_fidelity"),
                                      list(zip(traj.t.tolist(), (1 - traj.fidelity).tolist())),
                                      "1 - F(rho, rho*) during the hot stroke")
    finite_t = replace(config, t_th=0.1) if config.full_thermalization else config
    limit, k = otto.run_until_limit_cycle(finite_t)
    res.tables["limit_cycle"] = trajectory_table(limit, f"limit cycle at t_th={finite_t.t_th}")
    res.summary = {"full": full.scalars(), "limit": limit.scalars(), "cycles_to_limit": k,
                   "max_one_minus_fidelity_23": float(np.max(1 - traj.fidelity))}
    return res


def run_power_vs_tth(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    j_values, t_th_values = axes["j"], axes["t_th"]
    points = [(j, t) for j in j_values for t in t_th_values]
    outs = pmap(_power_point, [(config, j, t) for j, t in points])
    rows = [(j, t, o[0]["power"] if o[0] else None, o[0]["W_prime"] if o[0] else None, o[1])
            for (j, t), o in zip(points, outs)]
    pb = [(t, otto.pbar(config.lambda_i, config.lambda_f, config.T_c, config.T_h, config.omega, t))
          for t in t_th_values]
    res = Result()
    res.tables["power_vs_tth"] = Table(("j", "t_th", "power", "W_prime", "status"), rows)
    res.tables["pbar"] = Table(("t_th", "pbar"), pb, "large-j saturation power")
    return res


def _power_point(args):
    config, j, t_th = args
    return _guard(limit_cycle_point, replace(config, j=j, t_th=t_th))


def run_power_vs_j(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    T_h_values, j_values = axes["T_h"], axes["j"]
    t_th = 1.0 if config.full_thermalization else config.t_th
    points = [(th, j) for th in T_h_values for j in j_values]
    outs = pmap(_power_point, [(replace(config, T_h=th), j, t_th) for th, j in points])
    rows = [(th, j, o[0]["power"] if o[0] else None, o[1]) for (th, j), o in zip(points, outs)]
    summary = {"t_th": t_th}
    for th in T_h_values:
        ok = [(j, p) for t, j, p, _ in rows if t == th and p is not None]
        small = [(j, p) for j, p in ok if j <= 5]
        summary[f"T_h={th:g}"] = {
            "exponent_j_le_5": loglog_fit(*zip(*small)) if len(small) > 1 else None,
            "pbar": otto.pbar(config.lambda_i, config.lambda_f, config.T_c, th, config.omega, t_th),
            "max_power": max((p for _, p in ok), default=None),
        }
    res = Result()
    res.tables["power_vs_j"] = Table(("T_h", "j", "power", "status"), rows)
    res.summary = summary
    return res


def run_tT_vs_j(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    j_values, T_i = axes["j"], TT_INITIAL_TEMPERATURE
    outs = pmap(_tT_point, [(config, j, T_i) for j in j_values])
    rows = [(j, o[0]["t_T"] if o[0] else None, o[1]) for j, o in zip(j_values, outs)]
    ok = [(j, t) for j, t, s in rows if t]
    js, ts = map(np.array, zip(*ok))
    c = float(np.sum(ts / js) / np.sum(1 / js ** 2))
    qb = _tT_point((config, 0.5, T_i))[0]
    res = Result()
    res.tables["tT_vs_j"] = Table(("j", "t_T", "status"), rows)
    res.summary = {"fit_c_over_j": c, "fitted_exponent": loglog_fit(js, ts),
                   "t_T_qubit": qb["t_T"] if qb else None, "T_i": T_i, "T_f": config.T_c,
                   "tolerance": config.thermal_tol}
    return res


def _tT_point(args):
    config, j, T_i = args
    return _guard(t_T_point, replace(config, j=j), T_i)


def run_meanfield_vs_numeric(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    res = Result()
    for j in axes["j"]:
        t, mn, ma, run = meanfield_curve(replace(config, j=j), MF_INITIAL_TEMPERATURE, MF_T_MAX)
        res.tables[f"meanfield_j{j:g}"] = Table(
            ("t", "m_numeric", "m_meanfield", "delta_m_numeric", "delta_m_meanfield"),
            list(zip(t.tolist(), mn.tolist(), ma.tolist(), (mn - mn[0]).tolist(), (ma - run.m0).tolist())))
        res.summary[f"j={j:g}"] = {"max_dev_over_j": float(np.max(np.abs(mn - ma)) / j),
                                   "t_tilde": run.t_tilde, "m0": run.m0, "m_ss": run.m_ss}
    return res


def run_lmg_cycles(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    t_u_values = axes["t_u"]
    res = Result()
    recs = pmap(_lmg_cycle, [(config, t) for t in t_u_values])
    for t_u, rec in zip(t_u_values, recs):
        res.tables[f"cycle_tu{t_u:g}"] = trajectory_table(rec, f"full-thermalization LMG cycle, t_u={t_u:g}")
        s23 = rec.stroke(23)["t_star"]
        res.summary[f"t_u={t_u:g}"] = {"W_prime": rec.W_prime, "max_t_star_23": float(np.max(s23)),
                                       "overshoot": bool(np.max(s23) > config.T_h * (1 + OVERSHOOT_RTOL))}
    return res


def _lmg_cycle(args):
    config, t_u = args
    return otto.run_cycle(replace(config, t_u=t_u, t_th=otto.FULL, trace_thermal=True))[0]


def run_tstar_dip(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    j_values = axes["j"]
    res = Result()
    outs = pmap(_dip_stroke, [(config, j) for j in j_values])
    for j, (rows, tmin) in zip(j_values, outs):
        res.tables[f"stroke12_j{j:g}"] = Table(TRAJECTORY_COLUMNS, rows, "unitary stroke 1->2")
        res.summary[f"j={j:g}"] = {"min_t_star": tmin}
    return res


def _dip_stroke(args):
    config, j = args
    cfg = replace(config, j=j)
    from .unitary import evolve_unitary
    _, tr = evolve_unitary(cfg.seed_state(), cfg.protocol(), cfg.basis, cfg.unitary_steps, cfg.n_samples)
    rows = [(12, *r) for r in zip(tr.t.tolist(), tr.energy.tolist(), tr.t_star.tolist(), tr.entropy.tolist())]
    return rows, float(np.min(tr.t_star))


def run_work_vs_tu(config: CycleConfig, axes: dict, pmap=_serial_map) -> Result:
    gamma_bar_values, t_u_values = axes["gamma_bar"], axes["t_u"]
    points = [(g, t) for g in gamma_bar_values for t in t_u_values]
    outs = pmap(_work_point, [replace(config, gamma_bar=g, t_u=t) for g, t in points])
    rows = [(g, t, o[0]["W_prime"] if o[0] else None, o[1]) for (g, t), o in zip(points, outs)]
    res = Result()
    res.tables["work_vs_tu"] = Table(("gamma_bar", "t_u", "W_prime", "status"), rows)
    res.summary = {f"gamma_bar={g:g}": {"min_W_prime": min(r[2] for r in rows if r[0] == g and r[2] is not None)}
                   for g in gamma_bar_values}
    res.summary["gamma_crit"] = lmgcrit.gamma_crit(config.lambda_i, config.lambda_f)
    return res


def _work_point(config):
    return _guard(full_cycle_point, config)


def run_work_vs_gammabar(config: CycleConfig, axes: dict, pmap=_serial_map, t_u_per_j: float = 1.0) -> Result:
    j_values, gamma_bar_values = axes["j"], axes["gamma_bar"]
    points = [(j, g) for j in j_values for g in gamma_bar_values]
    outs = pmap(_work_point, [replace(config, j=j, gamma_bar=g, t_u=t_u_per_j * j / config.omega)
                              for j, g in points])
    rows = [(j, g, o[0]["W_prime"] if o[0] else None, o[1]) for (j, g), o in zip(points, outs)]
    res = Result()
    res.tables["work_vs_gammabar"] = Table(("j", "gamma_bar", "W_prime", "status"), rows)
    res.summary = {"gamma_crit": lmgcrit.gamma_crit(config.lambda_i, config.lambda_f),
                   "t_u_per_j": t_u_per_j}
    for j in j_values:
        curve = [(g, w) for jj, g, w, _ in rows if jj == j and w is not None]
        if not curve:
            continue
        w0 = curve[0][1]
        onset = next((g for g, w in curve if w < 0.9 * w0), None)
        res.summary[f"j={j:g}"] = {"W_prime_at_first": w0, "drop_onset_gamma_bar": onset}
    return res


QUBIT_BASE = dict(j=0.5, lambda_i=1.0, lambda_f=3.0, T_c=1.0, T_h=8.0, gamma=0.1)
TTH_GRID = (0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0)
J_SMALL_TO_LARGE = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6, 8, 10, 15, 20, 25, 30, 35, 40)
TU_GRID = (0.1, 0.25, 0.5, 0.75, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40)
GBAR_GRID = tuple(0.25 * k for k in range(25))


def tT_point(config: CycleConfig) -> dict:
    return t_T_point(config, TT_INITIAL_TEMPERATURE)


def meanfield_point(config: CycleConfig) -> dict:
    _, mn, ma, _ = meanfield_curve(config, MF_INITIAL_TEMPERATURE, MF_T_MAX)
    return {"max_dev_over_j": float(np.max(np.abs(mn - ma)) / config.j)}


PRESETS = {
    p.name: p for p in [
        Preset("qubit-cycle", "single qubit, full thermalization, analytic overlay",
               {**QUBIT_BASE, "t_th": otto.FULL}, {}, run_qubit_cycle, cycle_point,
               ("W_prime", "Q_h", "Q_c", "eta")),
        Preset("qubit-limit-cycle", "single qubit approaching the limit cycle (t_th = 1)",
               {**QUBIT_BASE, "t_th": 1.0}, {}, run_qubit_limit_cycle, cycle_point,
               ("W_prime", "power", "eta", "cycles")),
        Preset("collective-cycle", "collective spin j=20: full cycle, fidelity, limit cycle",
               {**QUBIT_BASE, "j": 20.0, "t_th": otto.FULL}, {}, run_collective_cycle, cycle_point,
               ("W_prime", "Q_h", "Q_c", "eta")),
        Preset("power-vs-tth", "limit-cycle power against thermal-stroke duration",
               {**QUBIT_BASE, "j": 20.0, "t_th": 1.0}, {"j": (1.0, 5.0, 10.0, 20.0), "t_th": TTH_GRID},
               run_power_vs_tth, limit_cycle_point, ("power", "W_prime", "eta", "cycles")),
        Preset("power-vs-j", "limit-cycle power against system size at t_th = 1",
               {**QUBIT_BASE, "t_th": 1.0, "T_h": 40.0}, {"T_h": (40.0, 80.0), "j": J_SMALL_TO_LARGE},
               run_power_vs_j, limit_cycle_point, ("power", "W_prime", "eta", "cycles")),
        Preset("tT-vs-j", "thermalization time against j, cooling from T=4 to the T_c bath",
               {**QUBIT_BASE, "j": 20.0}, {"j": tuple(float(j) for j in range(5, 41))}, run_tT_vs_j,
               tT_point, ("t_T",)),
        Preset("meanfield-vs-numeric", "mean-field <J_z>(t) against the rate equations, T=8 to the T_c bath",
               {**QUBIT_BASE, "j": 20.0, "T_c": 4.0}, {"j": (10.0, 20.0, 40.0)}, run_meanfield_vs_numeric,
               meanfield_point, ("max_dev_over_j",)),
        Preset("lmg-cycles", "LMG cycles for several unitary-stroke durations",
               {**QUBIT_BASE, "j": 20.0, "gamma_bar": 3.0, "t_u": 8.0, "t_th": otto.FULL},
               {"t_u": (6.0, 8.0, 10.0, 15.0, 20.0, 100.0)}, run_lmg_cycles, full_cycle_point,
               ("W_prime", "Q_h", "Q_c", "eta")),
        Preset("tstar-dip-vs-j", "reference temperature along the critical stroke 1->2",
               {**QUBIT_BASE, "j": 20.0, "gamma_bar": 3.0, "t_u": 8.0, "t_th": otto.FULL},
               {"j": (10.0, 20.0, 30.0, 40.0)}, run_tstar_dip, full_cycle_point,
               ("min_t_star_12", "W_prime")),
        Preset("work-vs-tu", "extracted work against unitary-stroke duration",
               {**QUBIT_BASE, "j": 20.0, "gamma_bar": 3.0, "t_u": 1.0, "t_th": otto.FULL},
               {"gamma_bar": (0.75, 3.0), "t_u": TU_GRID}, run_work_vs_tu, full_cycle_point,
               ("W_prime", "Q_h", "Q_c", "eta")),
        Preset("work-vs-gammabar", "extracted work against interaction peak, t_u = j",
               {**QUBIT_BASE, "j": 20.0, "t_u": 20.0, "t_th": otto.FULL},
               {"j": (10.0, 20.0, 30.0), "gamma_bar": GBAR_GRID}, run_work_vs_gammabar,
               full_cycle_point, ("W_prime", "Q_h", "Q_c", "eta")),
    ]
}
