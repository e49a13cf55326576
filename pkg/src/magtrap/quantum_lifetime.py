"""
Escape lifetime of the trapped spin-1/2 ground state.

Internally everything is in scaled units: lengths in L = B0/B', energies in
mu B0.  For S = hbar/2 the kinetic prefactor is hbar^2/2m = 2 K^2 and
hbar omega_vib = 2 K mu B0, so the bound and continuum states depend on K
alone:

    psi_down = exp(-r^2 / 4K) e^{i phi/2} / sqrt(2 pi K)      E = 1 + 2K
    psi_up   = C J_1(r / K) e^{i phi/2}

The coupling matrix elements cancel down to ~exp(-1/K) of the integrand
scale, so the quadratures run in mpmath with enough digits to absorb the
cancellation.  Matrix elements are reported per unit continuum
normalization (H / C, erg cm); C drops out of the golden rule through
C^2 rho = m / (2 pi hbar^2).
"""

from dataclasses import dataclass, asdict
import json
import math
import warnings

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bessel import jn, jn_mp
from .trap_model import TrapConfig

LOG10_E = math.log10(math.e)

# Quadrature is attempted only down to this K; below it the cancellation
# would need more than ~70 significant digits.
MIN_QUADRATURE_K = 0.01
VALIDITY_K = 0.2


class NumericalError(RuntimeError):
    pass


class DomainError(ValueError):
    pass


def _check_spin_half(cfg):
    if not isinstance(cfg, TrapConfig):
        raise TypeError("expected a TrapConfig")
    if abs(cfg.spin - cfg.hbar / 2) > 1e-9 * cfg.hbar:
        raise ValueError("the quantum treatment covers S = hbar/2 only")


@dataclass(frozen=True)
class BoundState:
    K: float
    gaussian_width_parameter: float   # a in exp(-a r^2), cm^-2
    normalization: float              # D, cm^-1
    energy: float                     # erg
    length_unit: float                # B0/B', cm
    angular_index: float = 0.5

    @property
    def extent(self):
        """Delta r_down = sqrt(K) B0/B'."""
        return math.sqrt(self.K) * self.length_unit

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.normalization * np.exp(-self.gaussian_width_parameter * r * r)

    def wavefunction(self, r, phi):
        return self.radial(r) * np.exp(1j * self.angular_index * np.asarray(phi))


def bound_state(cfg):
    """Harmonic-approximation ground state of the spin-down channel."""
    _check_spin_half(cfg)
    K = cfg.K
    if K >= VALIDITY_K:
        warnings.warn(f"K = {K:.3g} is outside the harmonic/adiabatic regime (K < 0.2)",
                      stacklevel=2)
    L = cfg.B0 / cfg.Bperp
    return BoundState(K=K,
                      gaussian_width_parameter=1.0 / (4 * K * L * L),
                      normalization=1.0 / (L * math.sqrt(2 * math.pi * K)),
                      energy=cfg.mu * cfg.B0 * (1 + 2 * K),
                      length_unit=L)


@dataclass(frozen=True)
class ContinuumState:
    K: float
    wavenumber: float      # k, cm^-1
    normalization: float   # C, cm^-1 (box normalized)
    box_radius: float      # R, cm
    length_unit: float
    order: int = 1
    angular_index: float = 0.5

    @property
    def extent(self):
        """Delta r_up = K B0/B', the local oscillation scale."""
        return self.K * self.length_unit

    def radial(self, r):
        return self.normalization * jn(self.order, self.wavenumber * np.asarray(r, dtype=float))

    def eigen_wavenumbers(self, n):
        """Box eigen-wavenumbers from the large-kR boundary condition."""
        return (np.asarray(n) + 0.25) * math.pi / self.box_radius


def box_radius_window(cfg):
    """Admissible box radii: R >= 20 Delta r_down and R <= 0.1 B0/B'."""
    L = cfg.B0 / cfg.Bperp
    return 20 * math.sqrt(cfg.K) * L, 0.1 * L


def continuum_state(cfg, R):
    """Box-normalized spin-up state at the bound-state energy.

    C^2 = k / (2R) follows from the normalization integral with the large-kR
    form of J_2 at the zeros of J_1.
    """
    _check_spin_half(cfg)
    lo, hi = box_radius_window(cfg)
    if not lo <= R <= hi:
        raise DomainError(f"box radius {R:g} cm outside [{lo:g}, {hi:g}] cm "
                          f"(R >= 20 sqrt(K) B0/B', R <= 0.1 B0/B')")
    L = cfg.B0 / cfg.Bperp
    k = 1.0 / (cfg.K * L)
    return ContinuumState(K=cfg.K, wavenumber=k, normalization=math.sqrt(k / (2 * R)),
                          box_radius=R, length_unit=L)


def density_of_states(cfg, R):
    """rho(E = mu B0) = (1/2pi) sqrt(m / (hbar^2 mu B0)) R, per erg."""
    return math.sqrt(cfg.mass / (cfg.hbar**2 * cfg.mu * cfg.B0)) * R / (2 * math.pi)


def dos_product(cfg):
    """C^2 rho(E = mu B0) = m / (2 pi hbar^2), independent of R."""
    return cfg.mass / (2 * math.pi * cfg.hbar**2)


def width_scales(cfg):
    """(Delta r_up, Delta r_down, Delta r_muB) in cm: K L, sqrt(K) L and L."""
    L = cfg.B0 / cfg.Bperp
    K = cfg.K
    return K * L, math.sqrt(K) * L, L


def neglect_ratio(cfg):
    """mu B_min / (hbar^2 (dtheta/dr)_max^2 / 8m), which equals 2/K^2."""
    return cfg.mu * cfg.B0 / (cfg.hbar**2 * (cfg.Bperp / cfg.B0) ** 2 / (8 * cfg.mass))


# --- matrix element ---------------------------------------------------------

def _working_dps(exponent, extra=25):
    """Digits needed to resolve a result ~exp(-exponent) of its integrand."""
    return int(extra + math.ceil(exponent / math.log(10)))


def _panels(period, r_max):
    n = max(1, int(math.ceil(r_max / period)))
    return [mpmath.mpf(r_max) * i / n for i in range(n + 1)]


def gaussian_bessel_integral(a, b, order=1, power=2, dps=None, rtol=1e-12):
    """int_0^inf r^power J_order(b r) exp(-a r^2) dr by panelled Gauss-Legendre
    quadrature in extended precision.  Returns (value, error estimate) as
    mpmath numbers."""
    exponent = b * b / (4 * a)
    dps = dps or _working_dps(exponent)
    with mpmath.workdps(dps):
        a_, b_ = mpmath.mpf(a), mpmath.mpf(b)
        # integrand below 10^-(dps) of its peak beyond r_max
        r_max = math.sqrt((dps + 5) * math.log(10) / a) + 1.0 / math.sqrt(a)
        pts = _panels(2 * math.pi / b, r_max)

        def f(r):
            return r**power * jn_mp(order, b_ * r, dps) * mpmath.exp(-a_ * r * r)

        value, err = mpmath.quad(f, pts, method="gauss-legendre", error=True)
    return value, err


def gaussian_bessel_closed_form(a, b):
    """(b / 4a^2) exp(-b^2 / 4a)."""
    return b / (4 * a * a) * math.exp(-b * b / (4 * a))


def _theta_terms(r, exact):
    if exact:
        s = 1 + r * r
        return r / mpmath.sqrt(s), 1 / s, -2 * r / (s * s)
    return r, mpmath.mpf(1), mpmath.mpf(0)


def _reduced_element_mp(K, exact=False, gamma=0.5, rtol=1e-10):
    """Scaled H/C (units mu B0 * B0/B') by quadrature of the full
    r, phi integral.  Returns (value, relative error estimate)."""
    nu = mpmath.mpf(1) / 2
    order = int(round(gamma + 0.5))
    if abs(order - (gamma + 0.5)) > 1e-12 or order < 0:
        raise ValueError("continuum angular index must be a non-negative half-integer")
    dps = _working_dps(1.0 / K)
    with mpmath.workdps(dps):
        Km = mpmath.mpf(K)
        k = 1 / Km
        D = 1 / mpmath.sqrt(2 * mpmath.pi * Km)

        def bracket(r):
            f = D * mpmath.exp(-r * r / (4 * Km))
            df = -r / (2 * Km) * f
            sin_t, dth, d2th = _theta_terms(r, exact)
            return -dth * df - d2th * f / 2 - dth * f / (2 * r) + nu * sin_t * f / (r * r)

        def radial(r):
            return r * jn_mp(order, k * r, dps) * bracket(r)

        r_max = math.sqrt(4 * K * (dps + 5) * math.log(10))
        pts = _panels(2 * math.pi * K, r_max)
        rad, rad_err = mpmath.quad(radial, pts, method="gauss-legendre", error=True)
        dm = nu - mpmath.mpf(gamma)
        ang, ang_err = mpmath.quad(lambda p: mpmath.expj(dm * p), [0, mpmath.pi, 2 * mpmath.pi],
                                   error=True)
        value = -2 * Km * Km * ang * rad
        scale = abs(value) if value != 0 else mpmath.mpf(1)
        err = (abs(ang) * rad_err + abs(rad) * ang_err) * 2 * Km * Km
        rel_err = err / scale
        if gamma == 0.5 and rel_err > rtol * 1e4:
            raise NumericalError(f"matrix element quadrature did not converge at K={K}: "
                                 f"relative error estimate {float(rel_err):.2e}, "
                                 f"{len(pts) - 1} panels, {dps} digits")
    return value, rel_err


def reduced_matrix_element_scaled(K, method="closed_form", gamma=0.5):
    """H/C in units of mu B0 * (B0/B') for the given method."""
    if method == "closed_form":
        return -4 * math.sqrt(2 * math.pi) * K**1.5 * math.exp(-1.0 / K)
    if method not in ("quadrature_approx", "quadrature_exact"):
        raise ValueError(f"unknown method {method!r}")
    if K < MIN_QUADRATURE_K:
        raise NumericalError(f"quadrature needs K >= {MIN_QUADRATURE_K} (K = {K:g}); "
                             "the integral cancels to exp(-1/K) of its integrand")
    value, _ = _reduced_element_mp(K, exact=(method == "quadrature_exact"), gamma=gamma)
    return complex(value) if gamma != 0.5 else float(mpmath.re(value))


def matrix_element(cfg, method="closed_form", gamma=0.5):
    """Coupling H_{down,up} per unit continuum normalization C, in erg cm.

    ``closed_form`` evaluates -sqrt(pi) hbar^2 (B'/(m B0)) sqrt(2/K) e^{-1/K};
    ``quadrature_approx`` integrates the coupling with sin(theta), theta' and
    theta'' replaced by their r -> 0 forms; ``quadrature_exact`` uses the
    exact field tilt.  ``gamma`` is the continuum angular index.
    """
    _check_spin_half(cfg)
    K = cfg.K
    if method == "closed_form":
        return (-math.sqrt(math.pi) * cfg.hbar**2 * cfg.Bperp / (cfg.mass * cfg.B0)
                * math.sqrt(2 / K) * math.exp(-1.0 / K))
    scale = cfg.mu * cfg.B0 * cfg.B0 / cfg.Bperp
    return reduced_matrix_element_scaled(K, method, gamma) * scale


def log10_abs_matrix_element_closed(cfg):
    return (math.log10(math.sqrt(math.pi) * cfg.hbar**2 * cfg.Bperp / (cfg.mass * cfg.B0)
                       * math.sqrt(2 / cfg.K)) - LOG10_E / cfg.K)


# --- lifetime ---------------------------------------------------------------

def log10_t_esc_closed(cfg):
    """log10 of T_vib / (128 pi^2) exp(2/K), in seconds."""
    return math.log10(cfg.T_vib / (128 * math.pi**2)) + 2 * LOG10_E / cfg.K


@dataclass
class LifetimeReport:
    k: float
    log10_t_esc_closed: float
    log10_t_esc_composed: float
    ratio_log10: float
    matrix_element_closed: float
    matrix_element_quadrature: float | None
    log10_abs_matrix_element_closed: float
    dos_product: float
    t_vib_s: float
    composed_method: str
    outside_validity: bool
    config: dict

    @property
    def t_esc_closed_s(self):
        return 10.0**self.log10_t_esc_closed if self.log10_t_esc_closed < 308 else math.inf

    @property
    def t_esc_composed_s(self):
        return 10.0**self.log10_t_esc_composed if self.log10_t_esc_composed < 308 else math.inf

    def to_json(self, **kwargs):
        return json.dumps(asdict(self), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def lifetime(cfg, use_quadrature=True):
    """Closed-form escape time and the golden-rule chain assembled from its
    parts, 1/T = (2 pi / hbar) |H/C|^2 C^2 rho, all in log space.

    The composed chain uses the ``quadrature_approx`` matrix element when
    K >= MIN_QUADRATURE_K, otherwise the closed-form element.
    """
    _check_spin_half(cfg)
    K = cfg.K
    closed = matrix_element(cfg, "closed_form")
    log10_h_closed = log10_abs_matrix_element_closed(cfg)
    quad = None
    log10_h = log10_h_closed
    method = "closed_form"
    if use_quadrature and K >= MIN_QUADRATURE_K:
        quad = matrix_element(cfg, "quadrature_approx")
        log10_h = math.log10(abs(quad))
        method = "quadrature_approx"
    dos = dos_product(cfg)
    log10_rate = math.log10(2 * math.pi / cfg.hbar) + 2 * log10_h + math.log10(dos)
    composed = -log10_rate
    closed_t = log10_t_esc_closed(cfg)
    return LifetimeReport(
        k=K,
        log10_t_esc_closed=closed_t,
        log10_t_esc_composed=composed,
        ratio_log10=composed - closed_t,
        matrix_element_closed=closed,
        matrix_element_quadrature=quad,
        log10_abs_matrix_element_closed=log10_h_closed,
        dos_product=dos,
        t_vib_s=cfg.T_vib,
        composed_method=method,
        outside_validity=K >= VALIDITY_K,
        config=cfg.as_dict(),
    )


# --- radial eigensolver -----------------------------------------------------

@dataclass
class RadialSolution:
    energies: np.ndarray
    r: np.ndarray
    f: np.ndarray   # (n_states, n_points), normalized: int f^2 r dr = 1

    @property
    def E0(self):
        return float(self.energies[0])


def radial_eigensolver(potential, r_max, n_points, kinetic=1.0, angular=0.0, n_states=1,
                       refine_tol=None):
    """Lowest eigenpairs of

        -kinetic (f'' + f'/r - angular f / r^2) + V(r) f = E f,   f(r_max) = 0.

    With f = u / sqrt(r) the first-derivative term disappears; the
    operator is discretized to second order on the cell-centred grid
    r_j = (j - 1/2) h in its symmetric conservative form, which is regular at
    the origin.  ``potential`` is a callable or samples on that grid.

    With ``refine_tol`` set (callable potentials only), the lowest
    eigenvalue is recomputed on a grid of half the resolution and a
    NumericalError raised if the two differ by more than refine_tol relative.
    """
    if refine_tol is not None:
        if not callable(potential):
            raise ValueError("refinement check needs a callable potential")
        fine = radial_eigensolver(potential, r_max, n_points, kinetic, angular, n_states)
        coarse = radial_eigensolver(potential, r_max, n_points // 2, kinetic, angular, 1)
        change = abs(fine.E0 - coarse.E0) / max(abs(fine.E0), 1e-300)
        if change > refine_tol:
            raise NumericalError(f"lowest eigenvalue moved by {change:.2e} (relative) when "
                                 f"halving the grid from {n_points} points; "
                                 f"tolerance {refine_tol:.1e}")
        return fine
    h = r_max / (n_points + 0.5)
    r = (np.arange(1, n_points + 1) - 0.5) * h
    V = potential(r) if callable(potential) else np.asarray(potential, dtype=float)
    if V.shape != r.shape:
        raise ValueError("potential samples must match the grid")
    r_plus = r + 0.5 * h
    r_minus = r - 0.5 * h
    diag = kinetic * (r_plus + r_minus) / (r * h * h) + kinetic * angular / (r * r) + V
    off = -kinetic * r_plus[:-1] / (h * h * np.sqrt(r[:-1] * r[1:]))
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_states - 1))
    u = vecs.T
    f = u / np.sqrt(r)
    norm = np.sqrt(np.sum(f * f * r, axis=1) * h)
    f = f / norm[:, None]
    sign = np.sign(f[:, 0])
    sign[sign == 0] = 1
    return RadialSolution(vals, r, f * sign[:, None])


def count_box_states(R, E_lo, E_hi, n_points, kinetic=1.0, angular=1.0):
    """Number of free-particle box eigenvalues in [E_lo, E_hi) (V = 0)."""
    h = R / (n_points + 0.5)
    r = (np.arange(1, n_points + 1) - 0.5) * h
    r_plus = r + 0.5 * h
    r_minus = r - 0.5 * h
    diag = kinetic * (r_plus + r_minus) / (r * h * h) + kinetic * angular / (r * r)
    off = -kinetic * r_plus[:-1] / (h * h * np.sqrt(r[:-1] * r[1:]))
    vals = eigh_tridiagonal(diag, off, eigvals_only=True, select="v",
                            select_range=(E_lo, E_hi))
    return len(vals)


def box_wavenumbers(R, n_states, n_points, angular=1.0):
    """Lowest box eigen-wavenumbers for V = 0 (kinetic = 1, so E = k^2)."""
    sol = radial_eigensolver(np.zeros(n_points), R, n_points, 1.0, angular, n_states)
    return np.sqrt(sol.energies)


def density_of_states_numerical(cfg, R, rel_window=0.2, points_per_wavelength=40):
    """rho(E = mu B0) by counting boxed order-1 states with k in
    k0 (1 -+ rel_window); the window is symmetric in k, so N / Delta E
    equals rho at the centre exactly when dN/dk is constant."""
    L = cfg.B0 / cfg.Bperp
    k0 = 1.0 / (cfg.K * L)
    k_lo, k_hi = k0 * (1 - rel_window), k0 * (1 + rel_window)
    kin = cfg.hbar**2 / (2 * cfg.mass)
    n_points = int(math.ceil(points_per_wavelength * k_hi * R / (2 * math.pi)))
    # work in units of R so the matrix is O(1)
    N = count_box_states(1.0, (k_lo * R) ** 2, (k_hi * R) ** 2, n_points)
    return N / (kin * (k_hi**2 - k_lo**2))


def bound_state_oracle(cfg, n_points=4000, extent_widths=12.0, include_gradient_term=False):
    """Ground state of the harmonic spin-down radial problem by finite
    differences; returns (E in erg, r in cm, f in cm^-1 normalized so that
    2 pi int f^2 r dr = 1).

    ``include_gradient_term`` adds back the (hbar^2/8m) (dtheta/dr)^2 term
    that the analytic treatment drops.
    """
    _check_spin_half(cfg)
    K = cfg.K
    L = cfg.B0 / cfg.Bperp
    r_max = extent_widths * math.sqrt(K)

    def V(r):
        v = 0.5 * r * r
        if include_gradient_term:
            v = v + 2 * K * K * 0.25 / (1 + r * r) ** 2
        return v

    sol = radial_eigensolver(V, r_max, n_points, kinetic=2 * K * K, angular=0.0)
    E = (1.0 + sol.E0) * cfg.mu * cfg.B0
    f = sol.f[0] / (math.sqrt(2 * math.pi) * L)
    return E, sol.r * L, f


def wavefunction_l2_distance(r, f_num, f_ref):
    """sqrt(2 pi int (f_num - f_ref)^2 r dr) on a uniform cell-centred grid."""
    h = r[1] - r[0]
    return math.sqrt(2 * math.pi * np.sum((f_num - f_ref) ** 2 * r) * h)
