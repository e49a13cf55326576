"""
Normal modes of the linearized trap around its stationary states.

Frequencies are in units of omega_vib.  The deviations from the stationary
state split into two invariant subspaces,

    G+ : (rho_+ = dx + i dy,  eps_- = eps_x - i eps_y)
    G- : (rho_- = dx - i dy,  eps_+ = eps_x + i eps_y)

each with a cubic secular equation.  For the spin-down state (n = -z)

    G+ :  K w^3 + w^2 - 1 = 0
    G- :  K w^3 - w^2 + 1 = 0

and for spin-up (n = +z) the constant terms flip sign.  The G+ root set is
the negative of the G- root set.
"""

import csv
from dataclasses import dataclass
import math

import numpy as np

from .trap_model import adiabaticity

SQRT3 = math.sqrt(3.0)

# Discriminant tolerance (relative to its K -> 0 value of 4) below which the
# double root is treated as real.
_DISCRIMINANT_TOL = 1e-12

BRANCHES = ("vibrational_plus", "vibrational_minus", "precessional")


def _orientation_sign(orientation):
    """n0 = -1 for spin-down, +1 for spin-up."""
    if orientation in ("down", -1):
        return -1
    if orientation in ("up", 1):
        return 1
    raise ValueError(f"orientation must be 'up' or 'down', got {orientation!r}")


def _symmetry_sign(symmetry):
    if symmetry in ("+", "G+", "plus", 1):
        return 1
    if symmetry in ("-", "G-", "minus", -1):
        return -1
    raise ValueError(f"symmetry must be '+' or '-', got {symmetry!r}")


def secular_coefficients(K, symmetry="-", orientation="down"):
    """Coefficients (highest power first) of K w^3 + s w^2 + c."""
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    s = _symmetry_sign(symmetry)
    n0 = _orientation_sign(orientation)
    # G+: K w^3 + w^2 + n0 ;  G-: K w^3 - w^2 - n0
    return np.array([K, float(s), 0.0, float(s * n0)])


def companion_matrix(coeffs):
    coeffs = np.asarray(coeffs, dtype=complex)
    monic = coeffs[1:] / coeffs[0]
    n = len(monic)
    C = np.zeros((n, n), dtype=complex)
    C[0, :] = -monic
    C[1:, :-1] = np.eye(n - 1)
    return C


def polish_roots(coeffs, roots, iterations=3):
    """A few Newton steps on each root; keeps the companion estimate if a
    step would increase the residual."""
    coeffs = np.asarray(coeffs, dtype=complex)
    deriv = np.polyder(coeffs)
    out = []
    for z in np.asarray(roots, dtype=complex):
        for _ in range(iterations):
            p = np.polyval(coeffs, z)
            dp = np.polyval(deriv, z)
            if dp == 0:
                break
            z_new = z - p / dp
            if abs(np.polyval(coeffs, z_new)) > abs(p):
                break
            z = z_new
        out.append(z)
    return np.array(out)


def polynomial_roots(coeffs):
    """Roots by companion-matrix eigenvalues, Newton-polished."""
    roots = np.linalg.eigvals(companion_matrix(coeffs))
    return polish_roots(coeffs, roots)


def relative_residual(coeffs, z):
    """|p(z)| divided by the sum of the magnitudes of the individual terms."""
    coeffs = np.asarray(coeffs, dtype=complex)
    powers = np.asarray(z, dtype=complex)[..., None] ** np.arange(len(coeffs) - 1, -1, -1)
    terms = coeffs * powers
    return np.abs(terms.sum(axis=-1)) / np.abs(terms).sum(axis=-1)


def cubic_discriminant(coeffs):
    a, b, c, d = (float(v) for v in coeffs)
    return 18 * a * b * c * d - 4 * b**3 * d + b * b * c * c - 4 * a * c**3 - 27 * a * a * d * d


def secular_roots(K, symmetry="-", orientation="down"):
    """The three roots of the secular cubic, sorted by real part.

    When the discriminant is non-negative (to a relative tolerance) all roots
    are real and their imaginary parts are set to exactly zero; this pins the
    classification at the double root K = K_c as stable.
    """
    coeffs = secular_coefficients(K, symmetry, orientation)
    roots = polynomial_roots(coeffs)
    if cubic_discriminant(coeffs) >= -_DISCRIMINANT_TOL * 4:
        roots = roots.real.astype(complex)
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def critical_K():
    return math.sqrt(4.0 / 27.0)


def locate_double_root(K0=0.4, omega0=1.7, tol=1e-15, max_iter=50):
    """Solve p(w) = 0 and p'(w) = 0 jointly for (K, w) on the spin-down G-
    cubic K w^3 - w^2 + 1 by Newton's method."""
    K, w = K0, omega0
    for _ in range(max_iter):
        f1 = K * w**3 - w * w + 1
        f2 = 3 * K * w * w - 2 * w
        J = np.array([[w**3, 3 * K * w * w - 2 * w],
                      [3 * w * w, 6 * K * w - 2]])
        dK, dw = np.linalg.solve(J, [-f1, -f2])
        K, w = K + dK, w + dw
        if abs(dK) < tol * abs(K) and abs(dw) < tol * abs(w):
            break
    else:
        raise RuntimeError("double-root search did not converge")
    return K, w


@dataclass(frozen=True)
class ModeSolution:
    omega_n: complex
    symmetry: str           # "+" or "-"
    branch: str
    rho_0: complex
    eps_0: complex
    amplitude: complex = 1.0

    @property
    def stable(self):
        return abs(self.omega_n.imag) <= 1e-12


def secular_matrix(K, omega_n, symmetry="-", orientation="down"):
    """The 2x2 homogeneous system acting on (rho_0, eps_0), scaled units."""
    s = _symmetry_sign(symmetry)
    n0 = _orientation_sign(orientation)
    w = complex(omega_n)
    # G+: w^2 rho + eps = 0 ; -n0 rho + (1 + K w) eps = 0
    # G-: w^2 rho + eps = 0 ;  n0 rho + (K w - 1) eps = 0
    return np.array([[w * w, 1.0], [-s * n0, s * (1 + s * K * w)]], dtype=complex)


def eigenvector_for(K, omega_n, A=1.0):
    """(rho_0, eps_0) = (A / w, -w A) in scaled units."""
    if omega_n == 0:
        raise ZeroDivisionError("zero mode frequency has no eigenvector")
    w = complex(omega_n)
    return A / w, -w * A


def eigenvector_residual(K, omega_n, symmetry="-", orientation="down", A=1.0):
    M = secular_matrix(K, omega_n, symmetry, orientation)
    v = np.array(eigenvector_for(K, omega_n, A))
    return np.linalg.norm(M @ v) / (np.linalg.norm(M) * np.linalg.norm(v))


def excitation_energy(K, omega_n, A=1.0):
    """Excitation energy of an oscillatory mode in units of mu B0:
    (3 - w^2) |A|^2.

    Positive for the vibrational modes (w^2 < 3), negative for the
    precessional mode and zero at the merge frequency sqrt(3).  ``K`` is
    used only to check that ``omega_n`` is a spin-down mode frequency.
    """
    w = complex(omega_n)
    if abs(w.imag) > 1e-12 * max(1.0, abs(w)):
        raise ValueError("excitation energy is defined for real mode frequencies only")
    w = w.real
    res = min(relative_residual(secular_coefficients(K, s, "down"), w) for s in "+-")
    if res > 1e-8:
        raise ValueError(f"{w} is not a spin-down mode frequency at K={K}")
    return (3.0 - w * w) * abs(A) ** 2


def friction_shift(K, omega_n0, rp_scaled, rt_scaled):
    """First-order complex frequency shift from viscous friction.

    ``rp_scaled`` is r_p/S and ``rt_scaled`` is r_t (B0/B')^2 / S.  Negative
    imaginary part means decay, positive means growth.
    """
    w = float(np.real(omega_n0))
    if abs(w * w - 3.0) < 1e-12:
        raise ZeroDivisionError("friction shift is singular at the degenerate frequency sqrt(3)")
    if rp_scaled < 0 or rt_scaled < 0:
        raise ValueError("friction inputs must be non-negative")
    return 1j * K * (rp_scaled * w**4 + rt_scaled) / (w * w - 3.0)


def damped_secular_polynomial(K, rp_scaled, rt_scaled):
    """Sextic (highest power first) combining both symmetry blocks of the
    spin-down state to first order in friction:

        -K^2 w^6 + w^4 - 2 w^2 + 1
        + 2iK w^5 (rp - K^2 rt) + 2iK w^3 (rt - rp) - 2iK w rt
    """
    rp, rt = rp_scaled, rt_scaled
    return np.array([
        -K * K,
        2j * K * (rp - K * K * rt),
        1.0,
        2j * K * (rt - rp),
        -2.0,
        -2j * K * rt,
        1.0,
    ], dtype=complex)


def damped_roots(K, rp_scaled, rt_scaled):
    return polynomial_roots(damped_secular_polynomial(K, rp_scaled, rt_scaled))


def _label_modes(K, plus_root, minus_roots):
    """Branch tags for the spin-down spectrum at one K (no continuity)."""
    plus = ModeSolution(plus_root, "+", "vibrational_plus", *eigenvector_for(K, plus_root))
    if np.all(minus_roots.imag == 0):
        slow, fast = sorted(minus_roots, key=lambda z: z.real)
    else:
        # conjugate pair: keep the growing root on the precessional branch
        slow, fast = sorted(minus_roots, key=lambda z: z.imag)
    return [plus,
            ModeSolution(slow, "-", "vibrational_minus", *eigenvector_for(K, slow)),
            ModeSolution(fast, "-", "precessional", *eigenvector_for(K, fast))]


def spin_down_modes(K):
    """The three physical modes (Re w > 0) of the spin-down state:
    one G+ and two G- modes."""
    K = adiabaticity(K)
    plus = secular_roots(K, "+", "down")
    minus = secular_roots(K, "-", "down")
    plus_root = plus[plus.real > 0][0]
    return _label_modes(K, plus_root, minus[minus.real > 0])


def spin_up_modes(K):
    """All six signed roots of the spin-up state, as {symmetry: roots}."""
    return {s: secular_roots(K, s, "up") for s in "+-"}


@dataclass(frozen=True)
class SweepRow:
    K: float
    modes: tuple

    @property
    def stable(self):
        return all(m.stable for m in self.modes)

    @property
    def frequencies(self):
        return [m.omega_n for m in self.modes]


def sweep(K_min, K_max, steps):
    """Spin-down spectrum on a uniform K grid with branches tracked by
    nearest-neighbour matching between adjacent grid points."""
    if not 0 < K_min < K_max:
        raise ValueError("need 0 < K_min < K_max")
    if steps < 2:
        raise ValueError("need at least 2 steps")
    rows = []
    previous = None
    for K in np.linspace(K_min, K_max, steps):
        modes = spin_down_modes(K)
        if previous is not None:
            modes = _track(K, previous, modes)
        rows.append(SweepRow(float(K), tuple(modes)))
        previous = modes
    return rows


def _track(K, previous, current):
    # the G+ branch is always alone; only the two G- modes can swap
    prev = [previous[1].omega_n, previous[2].omega_n]
    cur = [current[1].omega_n, current[2].omega_n]
    straight = abs(cur[0] - prev[0]) + abs(cur[1] - prev[1])
    swapped = abs(cur[1] - prev[0]) + abs(cur[0] - prev[1])
    if swapped < straight:
        cur = cur[::-1]
    return [current[0],
            ModeSolution(cur[0], "-", "vibrational_minus", *eigenvector_for(K, cur[0])),
            ModeSolution(cur[1], "-", "precessional", *eigenvector_for(K, cur[1]))]


SWEEP_HEADER = ["K", "re_w1", "im_w1", "re_w2", "im_w2", "re_w3", "im_w3", "stable"]


def write_sweep_csv(rows, path_or_file):
    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            cells = [repr(row.K)]
            for w in row.frequencies:
                cells += [repr(float(w.real)), repr(float(w.imag))]
            cells.append("true" if row.stable else "false")
            writer.writerow(cells)

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def read_sweep_csv(path):
    """Rows as dicts: K, frequencies (three complex), stable."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SWEEP_HEADER:
            raise ValueError(f"unexpected sweep header {header}")
        for cells in reader:
            vals = [float(c) for c in cells[:7]]
            out.append({
                "K": vals[0],
                "frequencies": [complex(vals[1], vals[2]), complex(vals[3], vals[4]),
                                complex(vals[5], vals[6])],
                "stable": cells[7] == "true",
            })
    return out
