"""
Report assembly for the command line: the order-of-magnitude summary table,
simulation summaries and the built-in self-checks.

Field names carry their units: ``_s`` for seconds, ``_scaled`` for
quantities in units of 1/omega_vib (times) or omega_vib (rates).
"""

from dataclasses import dataclass
import json
import math

import numpy as np

from . import classical_dynamics as cd
from . import mode_analysis as ma
from . import quantum_lifetime as ql
from .trap_model import PRESETS, FrictionCoefficients, ScaledFriction, TrapConfig

# Order-of-magnitude values quoted for the two presets.
TABLE_REFERENCE = {
    "neutron": {"mass_gram": 1e-25, "mu_erg_per_gauss": 1e-23, "k": 1e-5,
                "t_prec_s": 1e-6, "t_vib_s": 1e-1, "log10_t_esc_s": 1e5},
    "atom": {"mass_gram": 1e-22, "mu_erg_per_gauss": 1e-20, "k": 1e-8,
             "t_prec_s": 1e-9, "t_vib_s": 1e-1, "log10_t_esc_s": 1e8},
}
TABLE_QUANTITIES = ["mass_gram", "mu_erg_per_gauss", "k", "t_prec_s", "t_vib_s",
                    "log10_t_esc_s"]


def table_row(cfg):
    return {
        "mass_gram": cfg.mass,
        "mu_erg_per_gauss": cfg.mu,
        "k": cfg.K,
        "t_prec_s": cfg.T_prec,
        "t_vib_s": cfg.T_vib,
        "log10_t_esc_s": ql.log10_t_esc_closed(cfg),
    }


def table_rows(presets=None):
    presets = PRESETS if presets is None else presets
    return {name: table_row(cfg) for name, cfg in presets.items()}


def table_mismatches(rows):
    """(preset, quantity, computed, reference) for every entry that is off
    by more than one order of magnitude.  log10 T_esc must be within a
    factor of 3."""
    bad = []
    for name, row in rows.items():
        ref = TABLE_REFERENCE.get(name)
        if ref is None:
            continue
        for q in TABLE_QUANTITIES:
            limit = math.log10(3) if q == "log10_t_esc_s" else 1.0
            if abs(math.log10(row[q]) - math.log10(ref[q])) > limit:
                bad.append((name, q, row[q], ref[q]))
    return bad


def _magnitude(v):
    return f"~1e{round(math.log10(v)):+d}"


def format_table(rows):
    names = list(rows)
    labels = {"mass_gram": "m [g]", "mu_erg_per_gauss": "mu [erg/G]", "k": "K",
              "t_prec_s": "T_prec [s]", "t_vib_s": "T_vib [s]",
              "log10_t_esc_s": "log10 T_esc [s]"}
    lines = [f"{'':18s}" + "".join(f"{n:>24s}" for n in names)]
    for q in TABLE_QUANTITIES:
        cells = []
        for n in names:
            v = rows[n][q]
            cells.append(f"{_magnitude(v)} ({v:.3g})")
        lines.append(f"{labels[q]:18s}" + "".join(f"{c:>24s}" for c in cells))
    return "\n".join(lines)


# --- simulation summary -----------------------------------------------------

def simulate(K=None, cfg=None, kick=1e-3, t_final=200 * math.pi, dt=cd.DEFAULT_DT,
             rt=0.0, rp=0.0, mode=None):
    """Integrate a kicked spin-down state and summarize it.

    With ``cfg`` the friction coefficients are physical (g/s, erg s), with
    ``K`` they are already scaled (r_t/(m omega_vib), r_p/S).  ``mode``
    names a branch ("vibrational_plus", "vibrational_minus",
    "precessional") to start on its eigenvector instead of a generic kick
    (x displacement plus spin tilt, both of size ``kick``).
    """
    if (K is None) == (cfg is None):
        raise ValueError("give exactly one of K or cfg")
    trap = cfg if cfg is not None else K
    K = cfg.K if cfg is not None else float(K)
    if cfg is not None:
        friction = FrictionCoefficients(rt, rp).scaled(cfg)
    else:
        friction = ScaledFriction(rt, rp)
    if mode is None:
        state = cd.kicked_state(kick, kick)
    else:
        modes = {m.branch: m for m in ma.spin_down_modes(K)}
        if mode not in modes:
            raise ValueError(f"unknown mode {mode!r}; choose from {sorted(modes)}")
        state = cd.mode_state(K, modes[mode], amplitude=kick)
    stride = max(1, int(round(t_final / dt / 20000)))
    traj = cd.integrate(state, trap, dt=dt, t_final=t_final, friction=friction, stride=stride)

    if traj.escaped:
        traj.warnings.append("particle left the trap; drifts and rates cover the run until escape")
    lam0, xi0 = traj.lambda_series[0], traj.energy_series[0]
    lam_drift = float(np.max(np.abs(traj.lambda_series - lam0)) / abs(lam0))
    xi_drift = (float(np.max(np.abs(traj.energy_series - xi0)) / abs(xi0))
                if xi0 != 0 else float(np.max(np.abs(traj.energy_series))))

    # largest growth rate among the damped roots; for a single-mode start,
    # that mode's first-order shift
    rp_s, rt_s = friction.shift_groups(K)
    predicted = max(r.imag for r in ma.damped_roots(K, rp_s, rt_s))
    if mode is not None and (rp or rt):
        base = {m.branch: m for m in ma.spin_down_modes(K)}[mode].omega_n
        if abs(complex(base).imag) < 1e-12:
            predicted = ma.friction_shift(K, base, rp_s, rt_s).imag
    try:
        rate = cd.fit_growth_rate(traj)
    except ValueError:
        rate = None

    summary = {
        "k": K,
        "t_final_scaled": t_final,
        "dt_scaled": dt,
        "kick": kick,
        "mode": mode,
        "friction_translational_scaled": friction.translational,
        "friction_precessional_scaled": friction.precessional,
        "lambda_initial": float(lam0),
        "energy_initial_scaled": float(xi0),
        "lambda_drift_rel": lam_drift,
        "energy_drift_rel": xi_drift,
        "growth_rate_scaled": rate,
        "predicted_growth_rate_scaled": float(predicted),
        "max_norm_drift": traj.max_norm_drift,
        "escaped": traj.escaped,
        "t_end_scaled": float(traj.times[-1]),
        "warnings": list(traj.warnings),
    }
    if cfg is not None:
        summary["growth_rate_per_s"] = None if rate is None else rate * cfg.omega_vib
        summary["t_final_s"] = t_final / cfg.omega_vib
        summary["config"] = cfg.as_dict()
    return traj, summary


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# --- self-checks ------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_vieta(offset):
    worst = 0.0
    for K in (0.05, 0.1, 0.5, 1.0):
        for s in "+-":
            c = ma.secular_coefficients(K, s, "down")
            r = ma.secular_roots(K, s, "down")
            worst = max(worst,
                        abs(r.sum() + offset + c[1] / c[0]),
                        abs(np.prod(r) + c[3] / c[0]))
    return worst < 1e-10, f"max Vieta residual {worst:.1e}"


def _check_critical_K(offset):
    K, w = ma.locate_double_root()
    K = K + offset
    err = max(abs(K - math.sqrt(4 / 27)), abs(w - ma.SQRT3))
    return err < 1e-10, f"K_c = {K:.12f}, merge frequency {w:.12f}"


def _check_identity(offset):
    worst = 0.0
    for a, b in ((1.0, 1.0), (2.0, 5.0), (0.5, 10.0)):
        v, _ = ql.gaussian_bessel_integral(a, b)
        worst = max(worst, abs(float(v) / ql.gaussian_bessel_closed_form(a, b) - 1) + offset)
    return worst < 1e-8, f"max relative deviation {worst:.1e}"


def _check_dos(offset):
    cfg = TrapConfig.from_scaled(1e-5, 10.0)
    lo, hi = ql.box_radius_window(cfg)
    target = ql.dos_product(cfg)
    vals = []
    for R in (lo, hi):
        c = ql.continuum_state(cfg, R)
        vals.append(c.normalization**2 * ql.density_of_states(cfg, R) * (1 + offset))
    err = max(abs(v / target - 1) for v in vals)
    return err < 1e-12, f"C^2 rho at R = {lo:.3g}, {hi:.3g} cm: max deviation {err:.1e}"


def _check_spin_up(offset):
    worst = min(max(abs(r.imag) for r in ma.secular_roots(K, "+", "up"))
                for K in (0.01, 0.1, 1.0))
    worst -= offset
    return worst > 1e-6, f"smallest growth rate {worst:.3g}"


def _check_table(offset):
    rows = table_rows()
    for row in rows.values():
        row["log10_t_esc_s"] *= 10**offset
    bad = table_mismatches(rows)
    return not bad, "all presets within tolerance" if not bad else f"mismatched: {bad}"


CHECKS = {
    "vieta": _check_vieta,
    "critical_K": _check_critical_K,
    "spin_up_unstable": _check_spin_up,
    "integral_identity": _check_identity,
    "dos_r_independence": _check_dos,
    "preset_table": _check_table,
}


def run_checks(perturb=None):
    """Run every self-check.  ``perturb`` maps a check name to an offset
    injected into the checked quantity, to exercise the failure path."""
    perturb = perturb or {}
    unknown = set(perturb) - set(CHECKS)
    if unknown:
        raise KeyError(f"unknown checks: {sorted(unknown)}")
    results = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(perturb.get(name, 0.0))
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))
    return results
