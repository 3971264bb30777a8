#!/usr/bin/env python3
"""The exact minimum-dissipation protocol and its boundary jumps.

For the classical two-level system the optimal path conserves
pdot^2 / ((p+pdot)(1-p-pdot)) = k.  Solving for k from the boundary data
gives the full protocol in closed form up to one quadrature.  The optimal
control jumps at t = 0 and t = tau: it starts above the initial
equilibrium value and ends above the final one.
"""

import numpy as np

from minent import ThermalContext, optimal_protocol_for_target

ctx = ThermalContext(beta=1.0)

print(f"{'lam_f':>6} {'k':>10} {'sigma_min':>10} {'jump@0':>8} {'jump@tau':>9}")
for lam_f in (0.25, 0.5, 0.75, 1.0, 1.25):
    sol = optimal_protocol_for_target(0.0, lam_f, 1.0, ctx)
    jump0 = sol.lambda_star_start - sol.lambda_initial
    jump1 = sol.lambda_star_end - sol.lambda_final
    print(f"{lam_f:6.2f} {sol.k:10.5f} {sol.sigma_min:10.5f} "
          f"{jump0:8.4f} {jump1:9.4f}")

sol = optimal_protocol_for_target(0.0, 1.0, 1.0, ctx)
print("\nprotocol for lam_f = 1.0 (sampled):")
print(f"  held before t=0:  lam = {sol.lambda_initial:.4f}")
for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
    idx = min(int(frac * (len(sol.lambda_path) - 1)),
              len(sol.lambda_path) - 1)
    print(f"  t = {sol.lambda_times[idx]:.3f}: lam* = {sol.lambda_path[idx]:.4f}")
print(f"  held after t=tau: lam = {sol.lambda_final:.4f}")
print(f"\nminimum entropy production: {sol.sigma_min:.6f}")
print(f"path endpoint error: {abs(sol.p_path[-1] - 0.7310585786):.2e}")
