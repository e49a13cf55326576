# Normal modes of a spin trapped anti-parallel to the field, as a function
# of the adiabaticity K = omega_vib / omega_prec.
import math

import numpy as np

from magtrap import mode_analysis as ma

# Three physical modes for a spin-down particle: two vibrational ones near
# omega_vib and a fast precessional one near omega_prec.
for K in (0.01, 0.1, 0.3):
    modes = ma.spin_down_modes(K)
    print(f"K = {K:<5}", "  ".join(f"{m.branch}: {m.omega_n.real:.5f}" for m in modes))

# Slow precession (large K) lets the slow G- vibration and the precession
# meet at sqrt(3) omega_vib and turn into a growing/decaying pair.
K_c, w_c = ma.locate_double_root()
print(f"\ndouble root at K = {K_c:.10f} (sqrt(4/27) = {math.sqrt(4 / 27):.10f}), "
      f"omega = {w_c:.10f}")

rows = ma.sweep(0.30, 0.45, 16)
print("\n   K     stable   max Im(omega)")
for row in rows:
    growth = max(abs(w.imag) for w in row.frequencies)
    print(f"{row.K:.3f}   {str(row.stable):6s}   {growth:.4f}")

# The energy of each mode: positive for the vibrations, negative for the
# precession.  Friction drains energy, so it damps the first two and
# amplifies the third.
K = 0.1
print()
for m in ma.spin_down_modes(K):
    e = ma.excitation_energy(K, m.omega_n)
    shift = ma.friction_shift(K, m.omega_n, 1e-4, 1e-4)
    print(f"{m.branch:18s} energy/|A|^2 = {e:+8.3f}   Im(friction shift) = {shift.imag:+.2e}")

# A spin aligned with the field is never stable: one G+ root is always complex.
print()
for K in (0.01, 0.1, 1.0, 10.0):
    roots = ma.secular_roots(K, "+", "up")
    print(f"spin-up, K = {K:<5} growth rate {np.max(roots.imag):.4f}")
