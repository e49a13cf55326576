"""
Coupled translation-spin dynamics of the trapped particle.

In scaled units (length B0/B', time 1/omega_vib) the equations of motion are

    x'' =  n_x - a x'
    y'' = -n_y - a y'
    n'  = (1/K) n x b - rho n x n'          b = (x, -y, 1)

with a = r_t/(m omega_vib) and rho = r_p/S.  The implicit spin equation is
solved in closed form: with w = (1/K) n x b (orthogonal to n),

    n' = (w - rho n x w) / (1 + rho^2).

Integration is classical fixed-step RK4 with n renormalized after each step.
"""

import csv
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .trap_model import (FrictionCoefficients, ScaledFriction, TrapConfig,
                         adiabaticity)
from . import mode_analysis

DEFAULT_DT = 2 * math.pi / 1000
NORM_DRIFT_LIMIT = 1e-6


class AccuracyWarning(UserWarning):
    pass


@dataclass
class ClassicalState:
    """Scaled position, velocity and unit spin direction."""

    pos: np.ndarray
    vel: np.ndarray
    n_hat: np.ndarray

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float).reshape(2)
        self.vel = np.asarray(self.vel, dtype=float).reshape(2)
        self.n_hat = np.asarray(self.n_hat, dtype=float).reshape(3)

    @classmethod
    def stationary(cls, orientation="down"):
        nz = -1.0 if orientation == "down" else 1.0
        if orientation not in ("down", "up"):
            raise ValueError(f"orientation must be 'up' or 'down', got {orientation!r}")
        return cls([0.0, 0.0], [0.0, 0.0], [0.0, 0.0, nz])

    @classmethod
    def from_array(cls, y):
        return cls(y[0:2], y[2:4], y[4:7])

    def to_array(self):
        return np.concatenate([self.pos, self.vel, self.n_hat])

    def normalized(self):
        return ClassicalState(self.pos, self.vel, self.n_hat / np.linalg.norm(self.n_hat))


def _resolve_friction(friction, trap):
    if friction is None:
        return 0.0, 0.0
    if isinstance(friction, ScaledFriction):
        return friction.translational, friction.precessional
    if isinstance(friction, FrictionCoefficients):
        if not isinstance(trap, TrapConfig):
            raise TypeError("physical friction coefficients need a TrapConfig to be scaled")
        s = friction.scaled(trap)
        return s.translational, s.precessional
    a, rho = friction
    return float(a), float(rho)


def _rhs(y, inv_K, a, rho):
    x, yy, vx, vy, nx, ny, nz = y
    # w = (1/K) n x b with b = (x, -y, 1)
    wx = (ny + nz * yy) * inv_K
    wy = (nz * x - nx) * inv_K
    wz = (-nx * yy - ny * x) * inv_K
    if rho:
        cx = ny * wz - nz * wy
        cy = nz * wx - nx * wz
        cz = nx * wy - ny * wx
        d = 1.0 / (1.0 + rho * rho)
        wx = (wx - rho * cx) * d
        wy = (wy - rho * cy) * d
        wz = (wz - rho * cz) * d
    return (vx, vy, nx - a * vx, -ny - a * vy, wx, wy, wz)


def rhs(state, trap, friction=None):
    """Time derivative of (pos, vel, n_hat) in scaled units.

    ``trap`` is a TrapConfig or a bare K; ``friction`` is a ScaledFriction,
    FrictionCoefficients (needs a TrapConfig) or an (a, rho) pair.
    """
    K = adiabaticity(trap)
    a, rho = _resolve_friction(friction, trap)
    y = state.to_array() if isinstance(state, ClassicalState) else state
    return np.array(_rhs(tuple(float(v) for v in y), 1.0 / K, a, rho))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (N, 7): x, y, vx, vy, nx, ny, nz
    lambda_series: np.ndarray   # L_z - S_z in units of S
    energy_series: np.ndarray   # excitation energy in units of mu B0
    K: float
    max_norm_drift: float = 0.0
    escaped: bool = False
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return ClassicalState.from_array(self.states[i])

    @property
    def x(self):
        return self.states[:, 0]

    @property
    def y(self):
        return self.states[:, 1]


def invariants(states, K):
    """Lambda/S and excitation energy / (mu B0) for an (N, 7) state array.

    Lambda = L_z - S_z; in scaled units L_z/S = (x v_y - y v_x)/K.  The
    excitation energy uses the exact -n.b, not a small-angle expansion.
    """
    s = np.atleast_2d(states)
    x, y, vx, vy, nx, ny, nz = s.T
    # 1 + n_z without cancellation near n_z = -1, valid for |n| = 1
    tilt2 = nx * nx + ny * ny
    with np.errstate(divide="ignore", invalid="ignore"):
        one_plus_nz = np.where(nz < 0, tilt2 / (1.0 - nz), 1.0 + nz)
    lam = (x * vy - y * vx) / K + 1.0 - one_plus_nz
    xi = -(nx * x - ny * y) - one_plus_nz + 0.5 * (vx * vx + vy * vy)
    return lam, xi


def invariants_of(state, trap):
    K = adiabaticity(trap)
    lam, xi = invariants(state.to_array(), K)
    return float(lam[0]), float(xi[0])


def integrate(state0, trap, dt=DEFAULT_DT, t_final=100 * 2 * math.pi, friction=None,
              stride=1, escape_radius=5.0):
    """Fixed-step RK4 with n renormalized after every step.

    Every ``stride``-th step is recorded, and always the last one.  If |n| drifts by more than 1e-6
    within a step (before renormalization) an AccuracyWarning is issued and
    noted in ``Trajectory.warnings``.  Integration stops early, with
    ``escaped`` set, once the particle leaves ``escape_radius`` (scaled).
    """
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    K = adiabaticity(trap)
    # RK4 is unstable for omega dt > 2.8; demand at least ~6 steps per
    # precession period (2 pi K in scaled time)
    if dt > K:
        raise ValueError(f"dt = {dt:g} does not resolve the precession period 2 pi K = "
                         f"{2 * math.pi * K:.3g} (scaled); use dt <= K")
    a, rho = _resolve_friction(friction, trap)
    y0 = state0.to_array() if isinstance(state0, ClassicalState) else np.asarray(state0, float)
    nsteps = int(round(t_final / dt))
    y, times, samples, drift = _run_rk4(tuple(float(v) for v in y0), 1.0 / K, a, rho,
                                        dt, nsteps, stride, escape_radius**2)
    states = np.array(samples)
    lam, xi = invariants(states, K)
    traj = Trajectory(np.array(times), states, lam, xi, K, drift,
                      escaped=times[-1] < nsteps * dt * (1 - 1e-12))
    if drift > NORM_DRIFT_LIMIT:
        msg = (f"|n| drifted by {drift:.2e} within one step (limit {NORM_DRIFT_LIMIT:g}); "
               f"reduce dt")
        traj.warnings.append(msg)
        warnings.warn(msg, AccuracyWarning, stacklevel=2)
    return traj


def _run_rk4(y, inv_K, a, rho, dt, nsteps, stride, escape2=math.inf):
    # stages written out on scalars: this loop dominates the run time
    f = _rhs
    h2 = 0.5 * dt
    h6 = dt / 6.0
    times = [0.0]
    samples = [y]
    max_drift = 0.0
    x0, x1, x2, x3, x4, x5, x6 = y
    for step in range(1, nsteps + 1):
        a0, a1, a2, a3, a4, a5, a6 = f((x0, x1, x2, x3, x4, x5, x6), inv_K, a, rho)
        b0, b1, b2, b3, b4, b5, b6 = f((x0 + h2 * a0, x1 + h2 * a1, x2 + h2 * a2, x3 + h2 * a3,
                                        x4 + h2 * a4, x5 + h2 * a5, x6 + h2 * a6), inv_K, a, rho)
        c0, c1, c2, c3, c4, c5, c6 = f((x0 + h2 * b0, x1 + h2 * b1, x2 + h2 * b2, x3 + h2 * b3,
                                        x4 + h2 * b4, x5 + h2 * b5, x6 + h2 * b6), inv_K, a, rho)
        d0, d1, d2, d3, d4, d5, d6 = f((x0 + dt * c0, x1 + dt * c1, x2 + dt * c2, x3 + dt * c3,
                                        x4 + dt * c4, x5 + dt * c5, x6 + dt * c6), inv_K, a, rho)
        x0 += h6 * (a0 + 2.0 * (b0 + c0) + d0)
        x1 += h6 * (a1 + 2.0 * (b1 + c1) + d1)
        x2 += h6 * (a2 + 2.0 * (b2 + c2) + d2)
        x3 += h6 * (a3 + 2.0 * (b3 + c3) + d3)
        x4 += h6 * (a4 + 2.0 * (b4 + c4) + d4)
        x5 += h6 * (a5 + 2.0 * (b5 + c5) + d5)
        x6 += h6 * (a6 + 2.0 * (b6 + c6) + d6)
        norm = math.sqrt(x4 * x4 + x5 * x5 + x6 * x6)
        drift = abs(norm - 1.0)
        if drift > max_drift:
            max_drift = drift
        x4 /= norm
        x5 /= norm
        x6 /= norm
        escaped = not x0 * x0 + x1 * x1 < escape2
        if step % stride == 0 or step == nsteps or escaped:
            times.append(step * dt)
            samples.append((x0, x1, x2, x3, x4, x5, x6))
        if escaped:
            break
    return (x0, x1, x2, x3, x4, x5, x6), times, samples, max_drift


def jacobian_at_stationary(trap, orientation="down", scaled=None):
    """Coefficient matrix M of the linearized equations,

        (dx'', dy'', eps_x', eps_y') = M (dx, dy, eps_x, eps_y).

    Physical units (s^-2, s^-1 cm^-1, ...) for a TrapConfig, scaled units for
    a bare K or when ``scaled=True``.
    """
    n0 = mode_analysis._orientation_sign(orientation)
    K = adiabaticity(trap)
    M = np.array([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, n0 / K, 0.0, 1.0 / K],
        [n0 / K, 0.0, -1.0 / K, 0.0],
    ])
    if scaled is None:
        scaled = not isinstance(trap, TrapConfig)
    if scaled:
        return M
    L = trap.B0 / trap.Bperp
    w = trap.omega_vib
    # rows: accelerations carry w^2 L, spin rates w; columns: positions 1/L
    out_scale = np.array([w * w * L, w * w * L, w, w])
    in_scale = np.array([1 / L, 1 / L, 1.0, 1.0])
    return out_scale[:, None] * M * in_scale[None, :]


def first_order_matrix(K, orientation="down"):
    """6x6 first-order form over (dx, dy, dvx, dvy, eps_x, eps_y), scaled."""
    M = jacobian_at_stationary(K, orientation, scaled=True)
    A = np.zeros((6, 6))
    A[0, 2] = A[1, 3] = 1.0
    A[2, [0, 1, 4, 5]] = M[0]
    A[3, [0, 1, 4, 5]] = M[1]
    A[4, [0, 1, 4, 5]] = M[2]
    A[5, [0, 1, 4, 5]] = M[3]
    return A


def mode_state(K, mode, amplitude=1e-3, orientation="down", phase=0.0):
    """Real initial state exciting a single normal mode.

    The real-form deviations are dx = Re(rho e^{-i phase}), dy = +-Im(...),
    eps_x = Re(eps e^{-i phase}), eps_y = -+Im(...), upper signs for G+.
    """
    n0 = mode_analysis._orientation_sign(orientation)
    w = complex(mode.omega_n)
    rho0, eps0 = mode_analysis.eigenvector_for(K, w, amplitude)
    s = 1 if mode.symmetry == "+" else -1
    e = np.exp(-1j * phase)
    rho, eps = rho0 * e, eps0 * e
    drho = -1j * w * rho
    x, y = rho.real, s * rho.imag
    vx, vy = drho.real, s * drho.imag
    ex, ey = eps.real, -s * eps.imag
    nz = n0 * math.sqrt(max(0.0, 1.0 - ex * ex - ey * ey))
    return ClassicalState([x, y], [vx, vy], [ex, ey, nz])


def kicked_state(displacement=1e-3, spin_tilt=0.0, orientation="down"):
    """Stationary state with an x displacement and an optional x spin tilt."""
    n0 = -1.0 if orientation == "down" else 1.0
    return ClassicalState([displacement, 0.0], [0.0, 0.0],
                          [spin_tilt, 0.0, n0 * math.sqrt(1 - spin_tilt**2)])


def deviation_norm(traj):
    s = traj.states
    return np.sqrt(s[:, 0]**2 + s[:, 1]**2 + s[:, 2]**2 + s[:, 3]**2 + s[:, 4]**2 + s[:, 5]**2)


def envelope(times, signal, window):
    """Windowed maxima of ``signal`` over consecutive windows of length
    ``window``; returns (window centres, maxima)."""
    times = np.asarray(times)
    signal = np.asarray(signal)
    n_per = max(1, int(round(window / (times[1] - times[0]))))
    n_win = len(times) // n_per
    t = times[: n_win * n_per].reshape(n_win, n_per)
    v = signal[: n_win * n_per].reshape(n_win, n_per)
    idx = np.argmax(v, axis=1)
    return t[np.arange(n_win), idx], v[np.arange(n_win), idx]


def fit_growth_rate(traj, signal=None, window=math.pi / 2, linear_limit=0.1, max_growth=1e4,
                    skip=0.2):
    """Exponential growth (positive) or decay (negative) rate, per scaled
    time, from a least-squares fit of the log envelope.

    The fit stops at the first window whose envelope reaches
    ``linear_limit`` or ``max_growth`` times its initial value, so that a
    runaway instability is fitted in its linear regime.  The first ``skip``
    fraction of the kept windows is discarded as transient.
    """
    if signal is None:
        signal = deviation_norm(traj)
    tc, env = envelope(traj.times, signal, window)
    if len(env) == 0:
        raise ValueError("trajectory shorter than one fitting window")
    limit = min(linear_limit, max_growth * env[0]) if env[0] > 0 else linear_limit
    over = np.nonzero(env >= limit)[0]
    stop = over[0] if len(over) else len(tc)
    idx = np.arange(len(tc))
    keep = (idx >= int(skip * stop)) & (idx < stop) & (env > 0)
    if keep.sum() < 3:
        raise ValueError("not enough envelope samples in the linear regime to fit a rate")
    slope, _ = np.polyfit(tc[keep], np.log(env[keep]), 1)
    return float(slope)


def spectrum(traj, signal="position"):
    """Hann-windowed spectrum of x + i y ("position") or n_x + i n_y ("spin").

    Returns signed angular frequencies (scaled), sorted, and magnitudes.  A
    component e^{+i W t} appears at +W.
    """
    s = traj.states
    if signal == "position":
        z = s[:, 0] + 1j * s[:, 1]
    elif signal == "spin":
        z = s[:, 4] + 1j * s[:, 5]
    else:
        raise ValueError(f"unknown signal {signal!r}")
    z = z - z.mean()
    dt = traj.times[1] - traj.times[0]
    win = np.hanning(len(z))
    # numpy's forward transform uses e^{-i...}; inverse-sign convention so
    # that e^{+iWt} lands at +W
    amp = np.abs(np.fft.ifft(z * win)) * len(z)
    freqs = 2 * np.pi * np.fft.fftfreq(len(z), d=dt)
    order = np.argsort(freqs)
    return freqs[order], amp[order]


def frequency_resolution(traj):
    return 2 * np.pi / (traj.times[-1] - traj.times[0] + (traj.times[1] - traj.times[0]))


def detect_peaks(freqs, amp, rel_threshold=1e-3):
    """Signed frequencies of local maxima above rel_threshold * max."""
    amp = np.asarray(amp)
    inner = (amp[1:-1] > amp[:-2]) & (amp[1:-1] >= amp[2:])
    idx = np.nonzero(inner)[0] + 1
    idx = idx[amp[idx] >= rel_threshold * amp.max()]
    return np.asarray(freqs)[idx], amp[idx]


TRAJECTORY_HEADER = ["t", "x", "y", "vx", "vy", "nx", "ny", "nz", "lambda", "xi"]


def write_trajectory_csv(traj, path_or_file, stride=1):
    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for i in range(0, len(traj), stride):
            writer.writerow([repr(float(traj.times[i]))]
                            + [repr(float(v)) for v in traj.states[i]]
                            + [repr(float(traj.lambda_series[i])),
                               repr(float(traj.energy_series[i]))])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def read_trajectory_csv(path, K=float("nan")):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header != TRAJECTORY_HEADER:
        raise ValueError(f"unexpected trajectory header {header}")
    return Trajectory(data[:, 0], data[:, 1:8], data[:, 8], data[:, 9], K)
