# Integrate the coupled translation and spin motion and compare with the
# linear mode spectrum.
import math

from magtrap import classical_dynamics as cd
from magtrap import mode_analysis as ma

# Stable regime: a small kick, 100 vibration periods.
K = 0.1
traj = cd.integrate(cd.kicked_state(1e-3, 1e-3), K, t_final=200 * math.pi)
lam, xi = traj.lambda_series, traj.energy_series
print(f"K = {K}: L_z - S_z drifts by {abs(lam - lam[0]).max():.1e}, "
      f"energy by {abs(xi - xi[0]).max() / abs(xi[0]):.1e} (relative)")

# Spectral peaks of x + i y sit at +omega for G+ modes and -omega for G-.
freqs, amp = cd.spectrum(traj, "position")
peaks, heights = cd.detect_peaks(freqs, amp, rel_threshold=1e-4)
print("spectral peaks:", ", ".join(f"{p:+.3f}" for p in sorted(peaks, key=abs)))
print("mode frequencies:", ", ".join(f"{m.omega_n.real:.3f}" for m in ma.spin_down_modes(K)))

# Unstable regime: above K_c the kick grows exponentially until the
# particle leaves the trap.
K = 0.5
traj = cd.integrate(cd.kicked_state(1e-6, 1e-6), K, t_final=200)
rate = cd.fit_growth_rate(traj)
predicted = max(r.imag for r in ma.secular_roots(K, "-"))
print(f"\nK = {K}: fitted growth {rate:.5f}, linear theory {predicted:.5f}")
if traj.escaped:
    print(f"left the trap at t = {traj.times[-1]:.1f}")
