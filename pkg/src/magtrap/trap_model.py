"""
Trap configuration, field map and unit scaling.

The trap field is B = B'(x x^ - y y^) + B0 z^.  All dynamics and mode
analysis run in scaled units where lengths are measured in B0/B', times in
1/omega_vib and energies in mu*B0; in those units the only parameter left is
the adiabaticity K = omega_vib / omega_prec.

CGS-Gaussian units are used at the API boundary (gauss, erg, gram, second).
"""

from dataclasses import dataclass
import math

import numpy as np

HBAR = 1.054571817e-27  # erg s


class InvalidConfigError(ValueError):
    """Raised for non-physical trap parameters or malformed config files."""


@dataclass(frozen=True)
class TrapConfig:
    """Physical parameters of the trap and the trapped particle.

    B0 is the bias field (G), Bperp the transverse gradient (G/cm), mu the
    magnetic moment (erg/G), mass in grams and spin S in erg s.  ``hbar`` is
    carried along so toy unit systems can be used for testing.
    """

    B0: float
    Bperp: float
    mu: float
    mass: float
    spin: float
    hbar: float = HBAR

    def __post_init__(self):
        for name in ("B0", "Bperp", "mu", "mass", "spin", "hbar"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidConfigError(f"{name} must be a positive finite number, got {value!r}")

    @classmethod
    def spin_half(cls, B0, Bperp, mu, mass, hbar=HBAR):
        return cls(B0, Bperp, mu, mass, hbar / 2, hbar)

    @classmethod
    def from_scaled(cls, K, omega_vib, B0=100.0, Bperp=10.0, hbar=HBAR):
        """Spin-1/2 configuration with prescribed K and omega_vib (rad/s).

        The field is fixed by ``B0`` and ``Bperp``; mu and m are solved from
        K = S B' / sqrt(mu m B0^3) and omega_vib^2 = B'^2 mu / (m B0).
        """
        if K <= 0 or omega_vib <= 0:
            raise InvalidConfigError("K and omega_vib must be positive")
        S = hbar / 2
        mu_times_m = (S * Bperp / (K * B0**1.5)) ** 2
        mu_over_m = omega_vib**2 * B0 / Bperp**2
        return cls(B0, Bperp, math.sqrt(mu_times_m * mu_over_m),
                   math.sqrt(mu_times_m / mu_over_m), S, hbar)

    @property
    def omega_prec(self):
        return self.mu * self.B0 / self.spin

    @property
    def omega_vib(self):
        return math.sqrt(self.Bperp**2 * self.mu / (self.mass * self.B0))

    @property
    def K(self):
        return math.sqrt(self.spin**2 * self.Bperp**2 / (self.mu * self.mass * self.B0**3))

    @property
    def T_prec(self):
        return 2 * math.pi / self.omega_prec

    @property
    def T_vib(self):
        return 2 * math.pi / self.omega_vib

    @property
    def gyromagnetic_ratio(self):
        return self.mu / self.spin

    @property
    def units(self):
        return ScaledUnits.of(self)

    def as_dict(self):
        return {"b0_gauss": self.B0, "bperp_gauss_per_cm": self.Bperp,
                "mu_erg_per_gauss": self.mu, "mass_gram": self.mass,
                "spin_erg_s": self.spin, "hbar_erg_s": self.hbar}


@dataclass(frozen=True)
class ScaledUnits:
    length_unit: float  # cm
    time_unit: float    # s
    energy_unit: float  # erg

    @classmethod
    def of(cls, cfg):
        return cls(cfg.B0 / cfg.Bperp, 1.0 / cfg.omega_vib, cfg.mu * cfg.B0)


@dataclass(frozen=True)
class FieldPoint:
    B: float
    theta: float
    dtheta_dr: float
    phi_field: float = 0.0


@dataclass(frozen=True)
class FrictionCoefficients:
    """Viscous friction in physical units: r_t in g/s, r_p in erg s."""

    r_t: float = 0.0
    r_p: float = 0.0

    def __post_init__(self):
        if self.r_t < 0 or self.r_p < 0:
            raise InvalidConfigError("friction coefficients must be non-negative")

    def scaled(self, cfg):
        return ScaledFriction(self.r_t / (cfg.mass * cfg.omega_vib), self.r_p / cfg.spin)


@dataclass(frozen=True)
class ScaledFriction:
    """Friction in scaled form: r_t/(m omega_vib) and r_p/S."""

    translational: float = 0.0
    precessional: float = 0.0

    def __post_init__(self):
        if self.translational < 0 or self.precessional < 0:
            raise InvalidConfigError("friction coefficients must be non-negative")

    def shift_groups(self, K):
        """The dimensionless pair (r_p/S, r_t (B0/B')^2 / S) used by the
        first-order frequency shift; r_t (B0/B')^2/S = (r_t/(m omega_vib))/K."""
        return self.precessional, self.translational / K


def adiabaticity(trap):
    """K from a TrapConfig, or pass a bare number through."""
    if isinstance(trap, TrapConfig):
        return trap.K
    K = float(trap)
    if not K > 0:
        raise InvalidConfigError(f"K must be positive, got {trap!r}")
    return K


def derived_frequencies(cfg):
    """Return (omega_prec, omega_vib, K)."""
    return cfg.omega_prec, cfg.omega_vib, cfg.K


def field_at(cfg, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack(np.broadcast_arrays(cfg.Bperp * x, -cfg.Bperp * y,
                                        np.full_like(x * y, cfg.B0)), axis=-1)


def field_polar(cfg, r, phi=0.0):
    """Magnitude, tilt and tilt gradient of the field at radius r (cm)."""
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    s = cfg.Bperp * r / cfg.B0
    return FieldPoint(B=cfg.B0 * math.sqrt(1 + s * s),
                      theta=math.atan(s),
                      dtheta_dr=(cfg.Bperp / cfg.B0) / (1 + s * s),
                      phi_field=-phi)


def adiabatic_potential(cfg, r):
    """Exact (mu |B|) and harmonic adiabatic potential at radius r, in erg."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    s = cfg.Bperp * r / cfg.B0
    exact = cfg.mu * cfg.B0 * np.sqrt(1 + s * s)
    harmonic = cfg.mu * cfg.B0 * (1 + 0.5 * s * s)
    if exact.ndim == 0:
        return float(exact), float(harmonic)
    return exact, harmonic


def trap_curvature(cfg):
    """k_x = k_y = mu B'^2 / B0, the spring constant at the trap centre."""
    return cfg.mu * cfg.Bperp**2 / cfg.B0


# Order-of-magnitude parameters for a neutron and an atom in a trap with
# B0 = 100 G and B0/B' = 10 cm.
NEUTRON = TrapConfig.spin_half(B0=100.0, Bperp=10.0, mu=1e-23, mass=1e-25)
ATOM = TrapConfig.spin_half(B0=100.0, Bperp=10.0, mu=1e-20, mass=1e-22)
PRESETS = {"neutron": NEUTRON, "atom": ATOM}

_CONFIG_KEYS = {
    "b0_gauss": "B0",
    "bperp_gauss_per_cm": "Bperp",
    "mu_erg_per_gauss": "mu",
    "mass_gram": "mass",
    "spin_erg_s": "spin",
    "hbar_erg_s": "hbar",
}


def parse_config(text):
    """Parse a flat ``key = value`` config into a TrapConfig.

    Blank lines and ``#`` comments are ignored; ``key: value`` is accepted
    too.  ``spin_half = true`` sets S = hbar/2 instead of ``spin_erg_s``.
    """
    values = {}
    spin_half = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split(sep, 1))
        key = key.lower()
        if key == "spin_half":
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise InvalidConfigError(f"spin_half: expected a boolean, got {value!r}")
            spin_half = value.lower() in ("true", "1", "yes")
            continue
        if key not in _CONFIG_KEYS:
            raise InvalidConfigError(f"unknown config key {key!r}")
        try:
            values[_CONFIG_KEYS[key]] = float(value)
        except ValueError:
            raise InvalidConfigError(f"{key}: not a number: {value!r}") from None

    hbar = values.pop("hbar", HBAR)
    if spin_half:
        if "spin" in values:
            raise InvalidConfigError("spin_erg_s: conflicts with spin_half = true")
        values["spin"] = hbar / 2
    inverse = {v: k for k, v in _CONFIG_KEYS.items()}
    for name in ("B0", "Bperp", "mu", "mass", "spin"):
        if name not in values:
            key = "spin_erg_s (or spin_half = true)" if name == "spin" else inverse[name]
            raise InvalidConfigError(f"missing config key {key}")
        if not values[name] > 0:
            raise InvalidConfigError(f"{inverse[name]}: must be positive, got {values[name]}")
    return TrapConfig(hbar=hbar, **values)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(cfg):
    return "".join(f"{key} = {value!r}\n" for key, value in cfg.as_dict().items())
