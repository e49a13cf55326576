# Quantum lifetime of the trapped ground state against spin flips.
import math

from magtrap import quantum_lifetime as ql
from magtrap import reporting
from magtrap.trap_model import TrapConfig

print(reporting.format_table(reporting.table_rows()))

# The coupling matrix element: closed form versus direct quadrature.  The
# integral cancels down to exp(-1/K) of its integrand, hence the extended
# precision.
print("\n    K     quadrature/closed     exact-tilt/closed")
for K in (0.1, 0.05, 0.02):
    cfg = TrapConfig.from_scaled(K, 10.0)
    closed = ql.matrix_element(cfg)
    approx = ql.matrix_element(cfg, "quadrature_approx")
    exact = ql.matrix_element(cfg, "quadrature_exact")
    print(f"{K:6.2f}   {approx / closed:.12f}      {exact / closed:.4g}")

# With the exact field tilt the ratio grows as K shrinks: the tilt has
# poles at r = +-i B0/B' whose contribution, ~exp(-3/(4K)), outlives the
# exp(-1/K) of the small-r result.

# Assembling the golden rule from its parts lands a constant factor above
# the closed-form lifetime.
report = ql.lifetime(TrapConfig.from_scaled(0.05, 10.0))
print(f"\ncomposed / closed lifetime = 10^{report.ratio_log10:.6f} "
      f"= {10 ** report.ratio_log10:.6f}")

# The box radius drops out of C^2 rho.
cfg = TrapConfig.from_scaled(1e-5, 10.0)
lo, hi = ql.box_radius_window(cfg)
for R in (lo, hi):
    c = ql.continuum_state(cfg, R)
    print(f"R = {R:.3f} cm: C^2 rho = {c.normalization ** 2 * ql.density_of_states(cfg, R):.6e}"
          f"  (m / 2 pi hbar^2 = {ql.dos_product(cfg):.6e})")
