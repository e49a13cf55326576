# Viscous friction on the spin makes the precessional mode grow.
import math

from magtrap import classical_dynamics as cd
from magtrap import mode_analysis as ma

K = 0.1
rp = 1e-4          # r_p / S
modes = {m.branch: m for m in ma.spin_down_modes(K)}

for branch in ("vibrational_plus", "precessional"):
    m = modes[branch]
    start = cd.mode_state(K, m, amplitude=1e-3)
    traj = cd.integrate(start, K, t_final=300, friction=(0.0, rp))
    rate = cd.fit_growth_rate(traj)
    predicted = ma.friction_shift(K, m.omega_n, rp, 0.0).imag
    print(f"{branch:17s} fitted {rate:+.3e}   first-order {predicted:+.3e}")

# The first-order law is the small-friction limit of the damped secular
# polynomial; the discrepancy shrinks quadratically.
for r in (1e-3, 5e-4, 2.5e-4):
    roots = ma.damped_roots(K, r, r)
    w0 = modes["precessional"].omega_n.real
    target = w0 + ma.friction_shift(K, w0, r, r)
    print(f"r = {r:.1e}: |root - first order| = {min(abs(roots - target)):.2e}")
